#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "podfed/aggregator.hpp"
#include "podfed/policy.hpp"
#include "podfed/quad.hpp"

namespace podfed {

/// Membership test used for source selection. The combined summary is the
/// production implementation; tests substitute exact oracles.
class MembershipIndex {
 public:
  virtual ~MembershipIndex() = default;
  virtual bool contains(Component c, const Term& t, const AccessKey& k,
                        std::string_view source) const = 0;
};

class SummaryIndex final : public MembershipIndex {
 public:
  explicit SummaryIndex(const CombinedSummary& s) : summary_(s) {}
  bool contains(Component c, const Term& t, const AccessKey& k,
                std::string_view source) const override {
    return summary_.at(c).contains(t, k, source);
  }

 private:
  const CombinedSummary& summary_;
};

struct SelectionReport {
  QuadPattern pattern;
  std::size_t candidates = 0;
  std::vector<std::string> selected;
  bool pruned_by_global = false;
  std::uint64_t probes = 0;
  std::uint64_t generation = 0;
};

/// Keeps the sources that, for every ground component of `q`, hold the
/// component value under at least one key of `keys`. A component absent
/// under every key for the wildcard source empties the selection at once.
/// Never drops a source that holds an authorized match.
std::pair<std::vector<std::string>, SelectionReport> select_sources(
    const QuadPattern& q, const KeyRing& keys, const MembershipIndex& index,
    const SourceList& sources);

std::pair<std::vector<std::string>, SelectionReport> select_sources(
    const QuadPattern& q, const KeyRing& keys, const CombinedSummary& summary,
    const SourceList& sources);

/// Where quad pattern queries go. Implementations throw FileNotFound or any
/// std::exception for unreachable sources.
class QueryEndpoint {
 public:
  virtual ~QueryEndpoint() = default;
  virtual std::vector<Quad> execute_query(const Requester& who,
                                          const QuadPattern& q,
                                          const std::string& source) const = 0;
};

struct ResultRow {
  Quad quad;
  std::string source;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
  friend auto operator<=>(const ResultRow&, const ResultRow&) = default;
};

struct QueryResult {
  /// Sorted, one row per (quad, source).
  std::vector<ResultRow> rows;
  /// source -> error message for sources that could not be queried.
  std::map<std::string, std::string> failures;
  std::uint64_t queries_issued = 0;

  std::vector<Quad> quads() const;
};

struct QueryOptions {
  bool parallel = false;
};

QueryResult query_sources(const Requester& who, const QuadPattern& q,
                          const std::vector<std::string>& sources,
                          const QueryEndpoint& endpoint,
                          QueryOptions options = {});

/// Source selection against the aggregator's current snapshot followed by
/// querying the selected sources.
std::pair<QueryResult, SelectionReport> federated_query(
    const Requester& who, const KeyRing& keys, const QuadPattern& q,
    const Aggregator& aggregator, const QueryEndpoint& endpoint,
    QueryOptions options = {});

}  // namespace podfed
