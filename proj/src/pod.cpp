#include "podfed/pod.hpp"

#include <algorithm>
#include <mutex>

namespace podfed {

Pod::Pod(PodConfig config, std::shared_ptr<const IdentityRegistry> registry,
         std::shared_ptr<KeyGenerator> keys)
    : config_(std::move(config)),
      registry_(std::move(registry)),
      keys_(std::move(keys)) {
  config_.params.validate();
  config_.groups.validate();
  for (const auto& p : config_.policies) {
    if (p.subject.pod_id != config_.id)
      throw std::invalid_argument("policy " + p.id + " belongs to pod " +
                                  p.subject.pod_id + ", not " + config_.id);
  }
}

std::vector<std::string> Pod::file_uris() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [uri, _] : files_) out.push_back(uri);
  return out;
}

bool Pod::has_file(const std::string& uri) const {
  std::shared_lock lock(mu_);
  return files_.contains(uri);
}

void Pod::subscribe(Listener l) {
  std::lock_guard lock(listeners_mu_);
  listeners_.push_back(std::move(l));
}

void Pod::notify(const ChangeNotification& n) {
  std::vector<Listener> listeners;
  {
    std::lock_guard lock(listeners_mu_);
    listeners = listeners_;
  }
  for (const auto& l : listeners) l(n);
}

std::shared_ptr<const PodFile> Pod::build_file(const std::string& uri,
                                               std::vector<Quad> quads) const {
  PolicyKeyMap qpk = create_access_keys(quads, uri, config_.policies, *keys_);
  FileSummary summary = create_file_summary(quads, uri, qpk, config_.params);
  return std::make_shared<const PodFile>(
      PodFile{uri, std::move(quads), std::move(qpk), std::move(summary)});
}

ChangeNotification Pod::update_file(const std::string& uri,
                                    std::vector<Quad> quads) {
  auto f = build_file(uri, std::move(quads));
  ChangeNotification n{uri, {}};
  for (const Quad& q : f->quads) {
    if (f->qpk.governed(q)) continue;
    std::string line = serialize_nquads({q});
    line.pop_back();
    n.warnings.push_back("no policy governs " + line +
                         "; stored but inaccessible and unsummarized");
  }
  {
    std::unique_lock lock(mu_);
    files_.insert_or_assign(uri, std::move(f));
  }
  notify(n);
  return n;
}

ChangeNotification Pod::update_file_text(const std::string& uri,
                                         std::string_view nquads) {
  return update_file(uri, parse_quads(nquads));
}

std::vector<std::string> Pod::rekey_policy(const std::string& policy_id) {
  std::vector<std::string> affected;
  for (const auto& p : config_.policies)
    if (p.id == policy_id) affected.push_back(p.file_uri);
  std::sort(affected.begin(), affected.end());
  affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
  std::vector<std::string> rebuilt;
  for (const auto& uri : affected) {
    auto current = file(uri);
    if (!current) continue;
    update_file(uri, current->quads);
    rebuilt.push_back(uri);
  }
  return rebuilt;
}

std::shared_ptr<const PodFile> Pod::file(const std::string& uri) const {
  std::shared_lock lock(mu_);
  auto it = files_.find(uri);
  return it == files_.end() ? nullptr : it->second;
}

bool Pod::verify(const Identity& i) const {
  if (!registry_) return false;
  auto it = registry_->find(i.webid);
  return it != registry_->end() && it->second == i.token;
}

std::vector<Quad> Pod::execute_query(const Requester& who,
                                     const QuadPattern& pattern,
                                     const std::string& uri) const {
  auto f = file(uri);
  if (!f) throw FileNotFound(uri);
  if (who && !verify(*who)) return {};
  const bool is_owner = who && who->webid == config_.owner_webid;

  std::vector<Quad> out;
  for (const Quad& q : f->quads) {
    if (!pattern_matches(pattern, q)) continue;
    const auto& bindings = f->qpk.bindings(q);
    // The owner reads every quad some permit policy summarizes; anything
    // else stays closed.
    const bool allowed =
        is_owner ? !f->qpk.keys(q).empty()
                 : allowed_access(bindings, who, q, config_.strategy);
    if (allowed) out.push_back(q);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FileSummary Pod::get_file_summary(const std::string& uri) const {
  auto f = file(uri);
  if (!f) throw FileNotFound(uri);
  return f->summary;
}

std::vector<std::uint8_t> Pod::serialized_summary(const std::string& uri) const {
  return serialize_file_summary(get_file_summary(uri));
}

}  // namespace podfed
