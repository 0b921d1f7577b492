#include "podfed/federation.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace podfed {

using nlohmann::json;

namespace {

std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& require(const json& obj, const std::string& path,
                    const char* field) {
  if (!obj.is_object()) throw ScenarioError(path, "expected an object");
  auto it = obj.find(field);
  if (it == obj.end())
    throw ScenarioError(path + "." + field, "missing required field");
  return *it;
}

std::string require_string(const json& obj, const std::string& path,
                           const char* field) {
  const json& v = require(obj, path, field);
  if (!v.is_string() || v.get_ref<const std::string&>().empty())
    throw ScenarioError(path + "." + field, "expected a non-empty string");
  return v.get<std::string>();
}

const json& optional_array(const json& obj, const std::string& path,
                           const char* field) {
  static const json kEmpty = json::array();
  auto it = obj.find(field);
  if (it == obj.end()) return kEmpty;
  if (!it->is_array())
    throw ScenarioError(path.empty() ? field : path + "." + field,
                        "expected an array");
  return *it;
}

std::set<std::string> string_set(const json& arr, const std::string& path) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string())
      throw ScenarioError(at_index(path, i), "expected a string");
    out.insert(arr[i].get<std::string>());
  }
  return out;
}

AmfParams parse_params(const json& doc) {
  AmfParams p;
  auto it = doc.find("params");
  if (it == doc.end()) return p;
  const json& j = *it;
  if (!j.is_object()) throw ScenarioError("params", "expected an object");
  try {
    if (j.contains("m")) p.m = j.at("m").get<std::uint64_t>();
    if (j.contains("h")) p.h = j.at("h").get<std::uint32_t>();
    if (j.contains("hash_alg"))
      p.hash_alg = j.at("hash_alg").get<std::uint8_t>();
  } catch (const json::exception& e) {
    throw ScenarioError("params", e.what());
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("params", e.what());
  }
  return p;
}

PodSpec parse_pod(const json& j, const std::string& path,
                  const ScenarioConfig& cfg) {
  PodSpec spec;
  PodConfig& pc = spec.config;
  pc.id = require_string(j, path, "id");
  pc.owner_webid = require_string(j, path, "owner");
  pc.params = cfg.params;
  pc.strategy = cfg.strategy;
  pc.groups.pod_id = pc.id;

  if (auto g = j.find("groups"); g != j.end()) {
    if (!g->is_object())
      throw ScenarioError(path + ".groups", "expected an object");
    pc.groups.acquaintances = string_set(
        optional_array(*g, path + ".groups", "acquaintances"),
        path + ".groups.acquaintances");
    pc.groups.friends = string_set(
        optional_array(*g, path + ".groups", "friends"),
        path + ".groups.friends");
  }
  for (const auto& f : pc.groups.friends)
    if (!pc.groups.acquaintances.contains(f))
      throw ScenarioError(path + ".groups.friends",
                          f + " is a friend but not an acquaintance");

  const json& files = optional_array(j, path, "files");
  std::set<std::string> uris;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string fpath = at_index(path + ".files", i);
    FileSpec file;
    file.uri = require_string(files[i], fpath, "uri");
    if (!uris.insert(file.uri).second)
      throw ScenarioError(fpath + ".uri", "duplicate file " + file.uri);
    if (auto t = files[i].find("nquads"); t != files[i].end()) {
      if (!t->is_string())
        throw ScenarioError(fpath + ".nquads", "expected a string");
      try {
        file.quads = parse_quads(t->get<std::string>());
      } catch (const ParseError& e) {
        throw ScenarioError(fpath + ".nquads", e.what());
      }
    }
    spec.files.push_back(std::move(file));
  }

  const json& policies = optional_array(j, path, "policies");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const std::string ppath = at_index(path + ".policies", i);
    const json& pj = policies[i];
    AccessPolicy p;
    p.id = require_string(pj, ppath, "id");
    if (!ids.insert(p.id).second)
      throw ScenarioError(ppath + ".id", "duplicate policy id " + p.id);
    std::string tier = require_string(pj, ppath, "tier");
    auto t = parse_tier(tier);
    if (!t) throw ScenarioError(ppath + ".tier", "unknown tier " + tier);
    p.subject = pc.groups.group(*t);
    std::string effect = pj.value("effect", std::string("permit"));
    if (effect == "permit")
      p.effect = Effect::kPermit;
    else if (effect == "prohibit")
      p.effect = Effect::kProhibit;
    else
      throw ScenarioError(ppath + ".effect", "unknown effect " + effect);
    p.file_uri = require_string(pj, ppath, "file");
    if (!uris.contains(p.file_uri))
      throw ScenarioError(ppath + ".file",
                          "file " + p.file_uri + " is not in pod " + pc.id);
    p.predicates = string_set(optional_array(pj, ppath, "predicates"),
                              ppath + ".predicates");
    pc.policies.push_back(std::move(p));
  }
  return spec;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", e.what());
  }
  if (!doc.is_object()) throw ScenarioError("$", "expected an object");

  ScenarioConfig cfg;
  cfg.params = parse_params(doc);
  std::string strategy = doc.value("conflict_strategy", "deny-overrides");
  if (strategy == "deny-overrides")
    cfg.strategy = ConflictStrategy::kDenyOverrides;
  else if (strategy == "permit-overrides")
    cfg.strategy = ConflictStrategy::kPermitOverrides;
  else
    throw ScenarioError("conflict_strategy", "unknown strategy " + strategy);

  if (auto p = doc.find("prefixes"); p != doc.end()) {
    if (!p->is_object()) throw ScenarioError("prefixes", "expected an object");
    for (const auto& [k, v] : p->items()) {
      if (!v.is_string())
        throw ScenarioError("prefixes." + k, "expected a string");
      cfg.prefixes[k] = v.get<std::string>();
    }
  }

  const json& identities = optional_array(doc, "", "identities");
  std::set<std::string> names;
  std::set<std::string> webids;
  for (std::size_t i = 0; i < identities.size(); ++i) {
    const std::string path = at_index("identities", i);
    NamedIdentity ni;
    ni.name = require_string(identities[i], path, "name");
    ni.identity.webid = require_string(identities[i], path, "webid");
    ni.identity.token = require_string(identities[i], path, "token");
    if (ni.name == "anonymous")
      throw ScenarioError(path + ".name", "the name anonymous is reserved");
    if (!names.insert(ni.name).second)
      throw ScenarioError(path + ".name", "duplicate identity " + ni.name);
    if (!webids.insert(ni.identity.webid).second)
      throw ScenarioError(path + ".webid",
                          "duplicate webid " + ni.identity.webid);
    cfg.identities.push_back(std::move(ni));
  }

  const json& pods = optional_array(doc, "", "pods");
  std::set<std::string> pod_ids;
  std::set<std::string> policy_ids;
  std::vector<std::string> all_files;
  std::set<std::string> file_set;
  for (std::size_t i = 0; i < pods.size(); ++i) {
    const std::string path = at_index("pods", i);
    PodSpec spec = parse_pod(pods[i], path, cfg);
    if (!pod_ids.insert(spec.config.id).second)
      throw ScenarioError(path + ".id", "duplicate pod " + spec.config.id);
    for (std::size_t k = 0; k < spec.config.policies.size(); ++k) {
      const std::string& id = spec.config.policies[k].id;
      if (!policy_ids.insert(id).second)
        throw ScenarioError(at_index(path + ".policies", k) + ".id",
                            "policy id " + id + " is used by another pod");
    }
    for (const auto& f : spec.files) {
      if (!file_set.insert(f.uri).second)
        throw ScenarioError(path + ".files",
                            "file " + f.uri + " is declared by two pods");
      all_files.push_back(f.uri);
    }
    cfg.pods.push_back(std::move(spec));
  }

  cfg.sources = all_files;
  if (auto agg = doc.find("aggregator"); agg != doc.end()) {
    if (!agg->is_object())
      throw ScenarioError("aggregator", "expected an object");
    if (agg->contains("sources")) {
      const json& src = optional_array(*agg, "aggregator", "sources");
      cfg.sources.clear();
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (!src[i].is_string())
          throw ScenarioError(at_index("aggregator.sources", i),
                              "expected a string");
        std::string u = src[i].get<std::string>();
        if (!file_set.contains(u))
          throw ScenarioError(at_index("aggregator.sources", i),
                              "undeclared source " + u);
        cfg.sources.push_back(std::move(u));
      }
    }
  }
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("$", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Federation::Federation(ScenarioConfig config, LoadOptions options)
    : config_(std::move(config)) {
  keys_ = options.fixed_keys
              ? std::make_shared<KeyGenerator>(options.seed)
              : std::make_shared<KeyGenerator>();

  auto registry = std::make_shared<IdentityRegistry>();
  for (const auto& ni : config_.identities)
    registry->emplace(ni.identity.webid, ni.identity.token);
  registry_ = registry;

  for (const auto& spec : config_.pods) {
    auto pod = std::make_unique<Pod>(spec.config, registry_, keys_);
    for (const auto& f : spec.files) {
      pod->update_file(f.uri, f.quads);
      file_owner_[f.uri] = pod.get();
    }
    pods_.push_back(std::move(pod));
  }

  aggregator_ = std::make_unique<Aggregator>(
      config_.params, [this](const std::string& uri) {
        Pod* p = pod_for_file(uri);
        if (!p) throw FileNotFound(uri);
        return p->serialized_summary(uri);
      });
  aggregator_->register_sources(config_.sources);

  std::set<std::string> sources(config_.sources.begin(), config_.sources.end());
  for (auto& pod : pods_) {
    pod->subscribe([this, sources](const ChangeNotification& n) {
      if (sources.contains(n.uri)) aggregator_->on_source_changed(n.uri);
    });
  }
}

Pod& Federation::pod(std::string_view id) const {
  for (const auto& p : pods_)
    if (p->id() == id) return *p;
  throw std::invalid_argument("unknown pod: " + std::string(id));
}

Pod* Federation::pod_for_file(const std::string& uri) const {
  auto it = file_owner_.find(uri);
  return it == file_owner_.end() ? nullptr : it->second;
}

Requester Federation::requester(std::string_view name) const {
  if (name == "anonymous") return std::nullopt;
  for (const auto& ni : config_.identities)
    if (ni.name == name || ni.identity.webid == name) return ni.identity;
  throw UnknownIdentity(std::string(name));
}

std::vector<AccessPolicy> Federation::all_policies() const {
  std::vector<AccessPolicy> out;
  for (const auto& p : pods_)
    out.insert(out.end(), p->policies().begin(), p->policies().end());
  return out;
}

KeyRing Federation::keyring(const Requester& who) const {
  std::map<std::string, std::string> owners;
  for (const auto& p : pods_) owners[p->id()] = p->owner();
  return keyring_for(who, all_policies(), owners, *keys_);
}

QuadPattern Federation::parse_pattern(std::string_view text) const {
  // Bare prefixed names become <...> before tokenizing.
  // Text inside quoted literals is left alone.
  const std::string raw(text);
  std::string rewritten;
  bool in_literal = false;
  std::size_t i = 0;
  while (i < raw.size()) {
    char c = raw[i];
    if (in_literal) {
      rewritten += c;
      if (c == '\\' && i + 1 < raw.size()) {
        rewritten += raw[++i];
      } else if (c == '"') {
        in_literal = false;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      in_literal = true;
      rewritten += c;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      rewritten += c;
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < raw.size() &&
           !std::isspace(static_cast<unsigned char>(raw[end])) &&
           raw[end] != '"')
      ++end;
    std::string tok = raw.substr(i, end - i);
    std::size_t colon = tok.find(':');
    if (colon != std::string::npos && tok[0] != '?' && tok[0] != '<' &&
        tok[0] != '_' && tok[0] != '@' && tok[0] != '^' &&
        config_.prefixes.contains(tok.substr(0, colon)))
      tok = "<" + tok + ">";
    rewritten += tok;
    i = end;
  }

  QuadPattern q = podfed::parse_pattern(rewritten);
  for (auto& pos : q.positions) {
    auto* t = std::get_if<Term>(&pos);
    if (!t || !t->is_iri()) continue;
    const std::string& v = t->value();
    std::size_t colon = v.find(':');
    if (colon == std::string::npos) continue;
    auto it = config_.prefixes.find(v.substr(0, colon));
    if (it == config_.prefixes.end()) continue;
    pos = Term::iri(it->second + v.substr(colon + 1));
  }
  return q;
}

std::vector<Quad> Federation::execute_query(const Requester& who,
                                            const QuadPattern& q,
                                            const std::string& source) const {
  Pod* p = pod_for_file(source);
  if (!p) throw FileNotFound(source);
  return p->execute_query(who, q, source);
}

std::pair<QueryResult, SelectionReport> Federation::query(
    const Requester& who, const QuadPattern& q, QueryOptions options) const {
  return federated_query(who, keyring(who), q, *aggregator_, *this, options);
}

QueryResult Federation::query_all_sources(const Requester& who,
                                          const QuadPattern& q) const {
  return query_sources(who, q, aggregator_->get_sources(), *this);
}

RotationReport Federation::rotate_key(const std::string& policy_id) {
  RotationReport report;
  report.policy_id = policy_id;
  report.generation_before = aggregator_->snapshot()->summary.generation;
  for (auto& pod : pods_) {
    for (const auto& p : pod->policies()) {
      if (p.id != policy_id) continue;
      if (p.effect != Effect::kPermit)
        throw std::invalid_argument("policy " + policy_id +
                                    " is a prohibition and carries no key");
      AccessKey before = keys_->generate(p);
      AccessKey after = keys_->rotate(p);
      report.key_changed = before != after;
      report.rebuilt_files = pod->rekey_policy(policy_id);
      report.generation_after = aggregator_->snapshot()->summary.generation;
      return report;
    }
  }
  throw std::invalid_argument("unknown policy: " + policy_id);
}

std::string replay_transcript(const Federation& fed, std::string_view text) {
  std::map<std::string, Identity> by_token;
  for (const auto& ni : fed.config().identities)
    by_token.emplace(ni.identity.token, ni.identity);

  std::ostringstream out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string token;
    std::string uri;
    if (!(fields >> token) || token[0] == '#') continue;
    ++n;
    out << "# " << n << ' ';
    if (!(fields >> uri)) {
      out << "error missing file URI\n";
      continue;
    }
    if (uri.size() > 2 && uri.front() == '<' && uri.back() == '>')
      uri = uri.substr(1, uri.size() - 2);
    std::string rest;
    std::getline(fields, rest);

    Requester who;
    if (token != "-") {
      auto it = by_token.find(token);
      // An unknown token still reaches the pod, which fails verification.
      who = it != by_token.end() ? it->second : Identity{"urn:podfed:unknown", token};
    }
    try {
      QuadPattern q = fed.parse_pattern(rest);
      std::vector<Quad> quads = fed.execute_query(who, q, uri);
      out << "ok " << quads.size() << '\n' << serialize_nquads(quads);
    } catch (const FileNotFound&) {
      out << "not-found\n";
    } catch (const std::exception& e) {
      out << "error " << e.what() << '\n';
    }
  }
  return out.str();
}

}  // namespace podfed
