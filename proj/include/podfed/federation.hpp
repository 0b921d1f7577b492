#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "podfed/aggregator.hpp"
#include "podfed/client.hpp"
#include "podfed/pod.hpp"
#include "podfed/policy.hpp"
#include "podfed/summary.hpp"

namespace podfed {

/// A validation failure at a JSON field path such as `pods[1].groups.friends`.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class UnknownIdentity : public std::invalid_argument {
 public:
  explicit UnknownIdentity(const std::string& name)
      : std::invalid_argument("unknown identity: " + name) {}
};

struct NamedIdentity {
  std::string name;
  Identity identity;
};

struct FileSpec {
  std::string uri;
  std::vector<Quad> quads;
};

struct PodSpec {
  PodConfig config;
  std::vector<FileSpec> files;
};

struct ScenarioConfig {
  AmfParams params;
  ConflictStrategy strategy = ConflictStrategy::kDenyOverrides;
  std::map<std::string, std::string> prefixes;
  std::vector<NamedIdentity> identities;
  std::vector<PodSpec> pods;
  SourceList sources;
};

/// Parses and validates a scenario document (JSON).
ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

struct LoadOptions {
  /// Derive policy keys from (seed, policy id) instead of the system CSPRNG.
  bool fixed_keys = false;
  std::uint64_t seed = 0;
};

struct RotationReport {
  std::string policy_id;
  std::vector<std::string> rebuilt_files;
  std::uint64_t generation_before = 0;
  std::uint64_t generation_after = 0;
  bool key_changed = false;
};

/// Pods, one aggregator over the configured sources, and the identities that
/// query them. Also the query endpoint that routes file URIs to pods.
class Federation final : public QueryEndpoint {
 public:
  Federation(ScenarioConfig config, LoadOptions options = {});

  Federation(const Federation&) = delete;
  Federation& operator=(const Federation&) = delete;

  const ScenarioConfig& config() const { return config_; }
  const AmfParams& params() const { return config_.params; }
  KeyGenerator& keys() { return *keys_; }

  const std::vector<std::unique_ptr<Pod>>& pods() const { return pods_; }
  Pod& pod(std::string_view id) const;
  /// nullptr when no pod holds `uri`.
  Pod* pod_for_file(const std::string& uri) const;

  Aggregator& aggregator() { return *aggregator_; }
  const Aggregator& aggregator() const { return *aggregator_; }

  /// `anonymous` maps to std::nullopt; otherwise an identity name or webid.
  Requester requester(std::string_view name) const;
  KeyRing keyring(const Requester& who) const;
  std::vector<AccessPolicy> all_policies() const;

  /// parse_pattern plus expansion of declared prefixes in IRI positions
  /// (`<x:name>` or bare `x:name`).
  QuadPattern parse_pattern(std::string_view text) const;

  std::vector<Quad> execute_query(const Requester& who, const QuadPattern& q,
                                  const std::string& source) const override;

  std::pair<QueryResult, SelectionReport> query(const Requester& who,
                                                const QuadPattern& q,
                                                QueryOptions options = {}) const;
  /// Queries every source directly, skipping selection.
  QueryResult query_all_sources(const Requester& who,
                                const QuadPattern& q) const;

  /// Regenerates the policy's key, rebuilds the governed file summaries and
  /// the combined summary. Keyrings pick the new key up on the next call.
  RotationReport rotate_key(const std::string& policy_id);

 private:
  ScenarioConfig config_;
  std::shared_ptr<KeyGenerator> keys_;
  std::shared_ptr<const IdentityRegistry> registry_;
  std::vector<std::unique_ptr<Pod>> pods_;
  std::map<std::string, Pod*> file_owner_;
  std::unique_ptr<Aggregator> aggregator_;
};

/// Replays a line-delimited request transcript. Each request line reads
/// `<token|-> <file-uri> <four pattern terms>`; tokens resolve through the
/// federation's identity registry. Each response starts with
/// `# <n> ok <count>`, `# <n> not-found` or `# <n> error <message>` followed
/// by the result quads in N-Quads.
std::string replay_transcript(const Federation& fed, std::string_view text);

}  // namespace podfed
