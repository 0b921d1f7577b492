#pragma once

// Test-only oracles. They read the scenario config or the pods' own state
// and never go through the summary or enforcement code they check.

#include <algorithm>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "podfed/client.hpp"
#include "podfed/federation.hpp"

namespace podfed::testing {

inline std::string scenario_path(const std::string& name = "addressbook") {
  return std::string(PODFED_SCENARIO_DIR) + "/" + name + ".json";
}

inline Quad make_quad(const std::string& s, const std::string& p,
                      const Term& o) {
  return Quad::make(Term::iri(s), Term::iri(p), o);
}

inline constexpr const char* kVocab = "urn:podfed:vocab#";
inline constexpr const char* kBobProfile = "https://bob.pods.org/profile";
inline constexpr const char* kCarolProfile = "https://carol.pods.org/profile";
inline constexpr const char* kAliceContacts = "https://alice.pods.org/contacts";
inline constexpr const char* kAliceMe = "https://alice.pods.org/profile#me";
inline constexpr const char* kBobMe = "https://bob.pods.org/profile#me";
inline constexpr const char* kCarolMe = "https://carol.pods.org/profile#me";
inline constexpr const char* kDaveMe = "https://dave.pods.org/profile#me";

inline Term vocab(const std::string& local) {
  return Term::iri(std::string(kVocab) + local);
}

inline QuadPattern predicate_pattern(const std::string& local) {
  QuadPattern q = QuadPattern::all_variables();
  q.positions[1] = vocab(local);
  return q;
}

/// Exact set membership over everything the pods inserted: an FPR-0 stand-in
/// for the combined summary.
class ExactIndex final : public MembershipIndex {
 public:
  explicit ExactIndex(const Federation& fed) {
    for (const auto& u : fed.aggregator().get_sources()) {
      auto file = fed.pod_for_file(u)->file(u);
      for (const Quad& q : file->quads)
        for (const AccessKey& k : file->qpk.keys(q))
          for (Component c : kComponents) {
            elements_.emplace(c, q.at(c), k, u);
            elements_.emplace(c, q.at(c), k, std::string());
          }
    }
  }

  bool contains(Component c, const Term& t, const AccessKey& k,
                std::string_view source) const override {
    return elements_.contains({c, t, k, std::string(source)});
  }

 private:
  std::set<std::tuple<Component, Term, AccessKey, std::string>> elements_;
};

/// Evaluates read access straight from the scenario document.
class RuleOracle {
 public:
  explicit RuleOracle(const ScenarioConfig& cfg) : cfg_(cfg) {}

  bool may_read(const Requester& who, const PodSpec& pod,
                const std::string& file, const Quad& q) const {
    bool governed = false;
    bool any_permit = false;
    bool permit = false;
    bool prohibit = false;
    for (const auto& p : pod.config.policies) {
      if (p.file_uri != file) continue;
      if (!p.predicates.empty() && !p.predicates.contains(q.predicate.value()))
        continue;
      governed = true;
      any_permit = any_permit || p.effect == Effect::kPermit;
      bool member = false;
      switch (p.subject.tier) {
        case Tier::kEveryone: member = true; break;
        case Tier::kAcquaintances:
          member = who && (pod.config.groups.acquaintances.contains(who->webid) ||
                           pod.config.groups.friends.contains(who->webid));
          break;
        case Tier::kFriends:
          member = who && pod.config.groups.friends.contains(who->webid);
          break;
      }
      if (!member) continue;
      (p.effect == Effect::kPermit ? permit : prohibit) = true;
    }
    if (!governed) return false;
    if (who && who->webid == pod.config.owner_webid) return any_permit;
    return cfg_.strategy == ConflictStrategy::kDenyOverrides ? permit && !prohibit
                                                             : permit;
  }

  /// Every readable quad matching `q` over the aggregated sources.
  std::vector<ResultRow> answer(const Requester& who,
                                const QuadPattern& q) const {
    std::vector<ResultRow> rows;
    for (const auto& pod : cfg_.pods)
      for (const auto& f : pod.files) {
        if (std::find(cfg_.sources.begin(), cfg_.sources.end(), f.uri) ==
            cfg_.sources.end())
          continue;
        for (const Quad& quad : f.quads)
          if (matches(q, quad) && may_read(who, pod, f.uri, quad))
            rows.push_back({quad, f.uri});
      }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
  }

 private:
  static bool matches(const QuadPattern& p, const Quad& q) {
    for (Component c : kComponents)
      if (const Term* t = p.ground(c); t && *t != q.at(c)) return false;
    // Repeated variables.
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) {
        const auto* a = std::get_if<Variable>(&p.positions[i]);
        const auto* b = std::get_if<Variable>(&p.positions[j]);
        if (a && b && a->name == b->name &&
            q.at(kComponents[i]) != q.at(kComponents[j]))
          return false;
      }
    return true;
  }

  const ScenarioConfig& cfg_;
};

inline std::vector<Requester> scenario_requesters(const Federation& fed) {
  std::vector<Requester> out;
  for (const char* n : {"alice", "bob", "carol", "dave"})
    out.push_back(fed.requester(n));
  out.push_back(std::nullopt);
  return out;
}

}  // namespace podfed::testing
