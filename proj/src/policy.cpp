#include "podfed/policy.hpp"

#include <algorithm>

#include "digest.hpp"

namespace podfed {

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::kEveryone: return "everyone";
    case Tier::kAcquaintances: return "acquaintances";
    case Tier::kFriends: return "friends";
  }
  return "?";
}

std::optional<Tier> parse_tier(std::string_view s) {
  if (s == "everyone") return Tier::kEveryone;
  if (s == "acquaintances") return Tier::kAcquaintances;
  if (s == "friends") return Tier::kFriends;
  return std::nullopt;
}

bool SubjectGroup::contains(const Requester& who) const {
  if (tier == Tier::kEveryone) return true;
  return who.has_value() && members.contains(who->webid);
}

SubjectGroup PodGroups::group(Tier tier) const {
  switch (tier) {
    case Tier::kEveryone: return SubjectGroup{pod_id, tier, {}};
    case Tier::kAcquaintances: return SubjectGroup{pod_id, tier, acquaintances};
    case Tier::kFriends: return SubjectGroup{pod_id, tier, friends};
  }
  throw std::invalid_argument("unknown tier");
}

void PodGroups::validate() const {
  for (const auto& f : friends) {
    if (!acquaintances.contains(f))
      throw std::invalid_argument("pod " + pod_id + ": friend " + f +
                                  " is not an acquaintance");
  }
}

bool AccessPolicy::covers(std::string_view file, const Quad& q) const {
  if (file != file_uri) return false;
  if (predicates.empty()) return true;
  return predicates.contains(q.predicate.value());
}

AccessKey AccessKey::secret(std::vector<std::uint8_t> bytes) {
  if (bytes.size() != kSecretSize)
    throw std::invalid_argument("access keys are 32 bytes");
  return AccessKey(std::move(bytes));
}

std::string AccessKey::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (std::uint8_t b : bytes_) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

AccessKey KeyGenerator::fresh(const std::string& policy_id,
                              std::uint32_t epoch) const {
  if (!fixed_seed_) return AccessKey::secret(detail::random_bytes(32));
  static constexpr std::string_view kDomain = "podfed fixed policy key";
  detail::Sha256 h;
  h.update({reinterpret_cast<const std::uint8_t*>(kDomain.data()),
            kDomain.size()});
  h.update_le64(*fixed_seed_);
  h.update_le32(epoch);
  h.update({reinterpret_cast<const std::uint8_t*>(policy_id.data()),
            policy_id.size()});
  auto d = h.finish();
  return AccessKey::secret({d.begin(), d.end()});
}

AccessKey KeyGenerator::generate(const AccessPolicy& p) {
  if (p.effect != Effect::kPermit)
    throw std::invalid_argument("policy " + p.id +
                                " is a prohibition and carries no key");
  if (p.subject.tier == Tier::kEveryone) return AccessKey::public_key();
  std::lock_guard lock(mu_);
  auto it = keys_.find(p.id);
  if (it == keys_.end())
    it = keys_.emplace(p.id, fresh(p.id, epochs_[p.id])).first;
  return it->second;
}

AccessKey KeyGenerator::rotate(const AccessPolicy& p) {
  if (p.effect != Effect::kPermit)
    throw std::invalid_argument("policy " + p.id +
                                " is a prohibition and carries no key");
  if (p.subject.tier == Tier::kEveryone) return AccessKey::public_key();
  std::lock_guard lock(mu_);
  std::uint32_t epoch = ++epochs_[p.id];
  AccessKey k = fresh(p.id, epoch);
  keys_.insert_or_assign(p.id, k);
  return k;
}

const std::vector<PolicyBinding>& PolicyKeyMap::bindings(const Quad& q) const {
  static const std::vector<PolicyBinding> kNone;
  auto it = entries_.find(q);
  return it == entries_.end() ? kNone : it->second;
}

std::vector<AccessKey> PolicyKeyMap::keys(const Quad& q) const {
  std::vector<AccessKey> out;
  for (const auto& b : bindings(q))
    if (b.key && std::find(out.begin(), out.end(), *b.key) == out.end())
      out.push_back(*b.key);
  return out;
}

PolicyKeyMap create_access_keys(std::span<const Quad> quads,
                                std::string_view file_uri,
                                std::span<const AccessPolicy> policies,
                                KeyGenerator& keys) {
  PolicyKeyMap qpk;
  for (const Quad& q : quads) {
    auto& pairs = qpk.entries_[q];
    if (!pairs.empty()) continue;  // duplicate quad in the file
    for (const AccessPolicy& p : policies) {
      if (!p.covers(file_uri, q)) continue;
      std::optional<AccessKey> k;
      if (p.effect == Effect::kPermit) k = keys.generate(p);
      pairs.push_back(PolicyBinding{p, std::move(k)});
    }
  }
  return qpk;
}

bool allowed_access(std::span<const PolicyBinding> bindings,
                    const Requester& who, const Quad& /*q*/,
                    ConflictStrategy strategy) {
  bool permitted = false;
  bool prohibited = false;
  for (const auto& b : bindings) {
    if (!b.policy.subject.contains(who)) continue;
    if (b.policy.effect == Effect::kPermit)
      permitted = true;
    else
      prohibited = true;
  }
  switch (strategy) {
    case ConflictStrategy::kDenyOverrides: return permitted && !prohibited;
    case ConflictStrategy::kPermitOverrides: return permitted;
  }
  return false;
}

KeyRing keyring_for(const Requester& who,
                    std::span<const AccessPolicy> policies,
                    const std::map<std::string, std::string>& pod_owners,
                    KeyGenerator& keys) {
  KeyRing ring{who, {AccessKey::public_key()}};
  for (const AccessPolicy& p : policies) {
    if (p.effect != Effect::kPermit) continue;
    bool owns = false;
    if (who) {
      auto it = pod_owners.find(p.subject.pod_id);
      owns = it != pod_owners.end() && it->second == who->webid;
    }
    // Anonymous requesters hold no secrets; everyone-tier keys are PUBLIC.
    if (owns || (who && p.subject.contains(who))) ring.keys.insert(keys.generate(p));
  }
  return ring;
}

}  // namespace podfed
