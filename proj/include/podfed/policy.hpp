#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "podfed/quad.hpp"

namespace podfed {

struct Identity {
  std::string webid;
  std::string token;

  friend bool operator==(const Identity&, const Identity&) = default;
};

/// A query issuer: an identity, or std::nullopt for unauthenticated access.
using Requester = std::optional<Identity>;

enum class Tier { kEveryone, kAcquaintances, kFriends };
enum class Effect { kPermit, kProhibit };
enum class ConflictStrategy { kDenyOverrides, kPermitOverrides };

std::string_view to_string(Tier t);
std::optional<Tier> parse_tier(std::string_view s);

struct SubjectGroup {
  std::string pod_id;
  Tier tier = Tier::kEveryone;
  /// Ignored for Tier::kEveryone, which contains every requester.
  std::set<std::string> members;

  bool contains(const Requester& who) const;
};

/// The three hierarchical groups of one pod. Friends must be a subset of
/// acquaintances; validate() enforces it.
struct PodGroups {
  std::string pod_id;
  std::set<std::string> acquaintances;
  std::set<std::string> friends;

  SubjectGroup group(Tier tier) const;
  /// Throws std::invalid_argument naming the first friend missing from the
  /// acquaintances.
  void validate() const;
};

struct AccessPolicy {
  std::string id;
  SubjectGroup subject;
  Effect effect = Effect::kPermit;
  std::string file_uri;
  /// Empty means every predicate in the file.
  std::set<std::string> predicates;

  bool covers(std::string_view file, const Quad& q) const;
};

class AccessKey {
 public:
  static constexpr std::size_t kSecretSize = 32;

  /// The distinguished key of public data: zero bytes.
  static AccessKey public_key() { return AccessKey(); }
  /// Throws std::invalid_argument unless `bytes` holds kSecretSize bytes.
  static AccessKey secret(std::vector<std::uint8_t> bytes);

  bool is_public() const { return bytes_.empty(); }
  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::string hex() const;

  friend bool operator==(const AccessKey&, const AccessKey&) = default;
  friend std::strong_ordering operator<=>(const AccessKey&,
                                          const AccessKey&) = default;

 private:
  AccessKey() = default;
  explicit AccessKey(std::vector<std::uint8_t> b) : bytes_(std::move(b)) {}

  std::vector<std::uint8_t> bytes_;
};

/// Issues one key per permit policy id and remembers it. Thread-safe.
class KeyGenerator {
 public:
  /// Keys from the operating system's CSPRNG.
  KeyGenerator() = default;
  /// Keys derived from (seed, policy id); for reproducible summaries only.
  explicit KeyGenerator(std::uint64_t fixed_seed) : fixed_seed_(fixed_seed) {}

  KeyGenerator(const KeyGenerator&) = delete;
  KeyGenerator& operator=(const KeyGenerator&) = delete;

  /// PUBLIC for everyone-tier policies. Throws std::invalid_argument for
  /// prohibitions, which carry no key.
  AccessKey generate(const AccessPolicy& p);
  /// Replaces the remembered key of `policy_id` with a fresh one.
  AccessKey rotate(const AccessPolicy& p);
  bool is_fixed() const { return fixed_seed_.has_value(); }

 private:
  AccessKey fresh(const std::string& policy_id, std::uint32_t epoch) const;

  std::optional<std::uint64_t> fixed_seed_;
  std::mutex mu_;
  std::map<std::string, AccessKey> keys_;
  std::map<std::string, std::uint32_t> epochs_;
};

struct PolicyBinding {
  AccessPolicy policy;
  /// Empty for prohibitions.
  std::optional<AccessKey> key;
};

/// Quad -> applicable (policy, key) pairs for one file.
class PolicyKeyMap {
 public:
  const std::vector<PolicyBinding>& bindings(const Quad& q) const;
  bool governed(const Quad& q) const { return !bindings(q).empty(); }
  /// Keys (distinct, permit policies only) that summarize `q`.
  std::vector<AccessKey> keys(const Quad& q) const;
  const std::map<Quad, std::vector<PolicyBinding>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }

 private:
  friend PolicyKeyMap create_access_keys(std::span<const Quad>,
                                         std::string_view,
                                         std::span<const AccessPolicy>,
                                         KeyGenerator&);
  std::map<Quad, std::vector<PolicyBinding>> entries_;
};

/// Binds every quad of `file_uri` to the policies covering it. Uncovered quads
/// map to an empty binding list.
PolicyKeyMap create_access_keys(std::span<const Quad> quads,
                                std::string_view file_uri,
                                std::span<const AccessPolicy> policies,
                                KeyGenerator& keys);

/// Permit/deny decision over every binding of `q`. An empty binding set
/// denies.
bool allowed_access(std::span<const PolicyBinding> bindings,
                    const Requester& who, const Quad& q,
                    ConflictStrategy strategy = ConflictStrategy::kDenyOverrides);

struct KeyRing {
  Requester owner;
  std::set<AccessKey> keys;

  bool contains(const AccessKey& k) const { return keys.contains(k); }
};

/// PUBLIC plus the key of every permit policy whose subject group contains
/// `who`, plus every permit key of pods `who` owns.
KeyRing keyring_for(const Requester& who,
                    std::span<const AccessPolicy> policies,
                    const std::map<std::string, std::string>& pod_owners,
                    KeyGenerator& keys);

}  // namespace podfed
