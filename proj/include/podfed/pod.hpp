#pragma once

#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "podfed/policy.hpp"
#include "podfed/quad.hpp"
#include "podfed/summary.hpp"

namespace podfed {

class FileNotFound : public std::runtime_error {
 public:
  explicit FileNotFound(const std::string& uri)
      : std::runtime_error("no such file: " + uri), uri_(uri) {}
  const std::string& uri() const { return uri_; }

 private:
  std::string uri_;
};

/// Immutable state of one file; replaced wholesale on update.
struct PodFile {
  std::string uri;
  std::vector<Quad> quads;
  PolicyKeyMap qpk;
  FileSummary summary;
};

struct ChangeNotification {
  std::string uri;
  /// One entry per stored quad that no policy governs.
  std::vector<std::string> warnings;
};

/// webid -> secret token. Shared by the pods of one federation.
using IdentityRegistry = std::map<std::string, std::string>;

struct PodConfig {
  std::string id;
  std::string owner_webid;
  PodGroups groups;
  std::vector<AccessPolicy> policies;
  AmfParams params;
  ConflictStrategy strategy = ConflictStrategy::kDenyOverrides;
};

class Pod {
 public:
  using Listener = std::function<void(const ChangeNotification&)>;

  /// Validates the group hierarchy and that the policies belong to this pod.
  Pod(PodConfig config, std::shared_ptr<const IdentityRegistry> registry,
      std::shared_ptr<KeyGenerator> keys);

  Pod(const Pod&) = delete;
  Pod& operator=(const Pod&) = delete;

  const std::string& id() const { return config_.id; }
  const std::string& owner() const { return config_.owner_webid; }
  const PodGroups& groups() const { return config_.groups; }
  const std::vector<AccessPolicy>& policies() const { return config_.policies; }
  const AmfParams& params() const { return config_.params; }
  std::vector<std::string> file_uris() const;
  bool has_file(const std::string& uri) const;

  /// Listeners run synchronously after every update_file.
  void subscribe(Listener l);

  /// Replaces the file's quads (creating the file if needed), rebuilds its
  /// key map and summary, then notifies listeners.
  ChangeNotification update_file(const std::string& uri,
                                 std::vector<Quad> quads);
  /// Parses `nquads` first; a ParseError leaves the pod untouched.
  ChangeNotification update_file_text(const std::string& uri,
                                      std::string_view nquads);

  /// Rebuilds key maps and summaries for every file `policy_id` governs.
  /// Returns the affected file URIs; listeners are notified for each.
  std::vector<std::string> rekey_policy(const std::string& policy_id);

  /// Matching quads the requester may read. An identity whose token does
  /// not verify gets an empty result. Throws FileNotFound.
  std::vector<Quad> execute_query(const Requester& who,
                                  const QuadPattern& pattern,
                                  const std::string& uri) const;

  FileSummary get_file_summary(const std::string& uri) const;
  std::vector<std::uint8_t> serialized_summary(const std::string& uri) const;
  std::shared_ptr<const PodFile> file(const std::string& uri) const;

  bool verify(const Identity& i) const;

 private:
  std::shared_ptr<const PodFile> build_file(const std::string& uri,
                                            std::vector<Quad> quads) const;
  void notify(const ChangeNotification& n);

  PodConfig config_;
  std::shared_ptr<const IdentityRegistry> registry_;
  std::shared_ptr<KeyGenerator> keys_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const PodFile>> files_;
  std::mutex listeners_mu_;
  std::vector<Listener> listeners_;
};

}  // namespace podfed
