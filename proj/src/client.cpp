#include "podfed/client.hpp"

#include <algorithm>
#include <future>

namespace podfed {

namespace {

bool any_key_contains(const MembershipIndex& index, Component c, const Term& t,
                      const KeyRing& keys, std::string_view source,
                      std::uint64_t& probes) {
  for (const AccessKey& k : keys.keys) {
    ++probes;
    if (index.contains(c, t, k, source)) return true;
  }
  return false;
}

}  // namespace

std::pair<std::vector<std::string>, SelectionReport> select_sources(
    const QuadPattern& q, const KeyRing& keys, const MembershipIndex& index,
    const SourceList& sources) {
  SelectionReport report{q, sources.size(), {}, false, 0, 0};
  std::vector<std::string> survivors = sources;

  for (Component c : kComponents) {
    const Term* value = q.ground(c);
    if (!value) continue;
    if (!any_key_contains(index, c, *value, keys, kAnySource, report.probes)) {
      report.pruned_by_global = true;
      return {{}, std::move(report)};
    }
    std::erase_if(survivors, [&](const std::string& u) {
      return !any_key_contains(index, c, *value, keys, u, report.probes);
    });
  }
  report.selected = survivors;
  return {std::move(survivors), std::move(report)};
}

std::pair<std::vector<std::string>, SelectionReport> select_sources(
    const QuadPattern& q, const KeyRing& keys, const CombinedSummary& summary,
    const SourceList& sources) {
  auto out = select_sources(q, keys, SummaryIndex(summary), sources);
  out.second.generation = summary.generation;
  return out;
}

std::vector<Quad> QueryResult::quads() const {
  std::vector<Quad> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.quad);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

QueryResult query_sources(const Requester& who, const QuadPattern& q,
                          const std::vector<std::string>& sources,
                          const QueryEndpoint& endpoint, QueryOptions options) {
  QueryResult result;
  auto collect = [&](const std::string& source, std::vector<Quad> quads) {
    for (auto& quad : quads) result.rows.push_back({std::move(quad), source});
  };

  if (options.parallel) {
    std::vector<std::future<std::vector<Quad>>> pending;
    pending.reserve(sources.size());
    for (const auto& u : sources)
      pending.push_back(std::async(std::launch::async, [&, u] {
        return endpoint.execute_query(who, q, u);
      }));
    for (std::size_t i = 0; i < sources.size(); ++i) {
      ++result.queries_issued;
      try {
        collect(sources[i], pending[i].get());
      } catch (const std::exception& e) {
        result.failures[sources[i]] = e.what();
      }
    }
  } else {
    for (const auto& u : sources) {
      ++result.queries_issued;
      try {
        collect(u, endpoint.execute_query(who, q, u));
      } catch (const std::exception& e) {
        result.failures[u] = e.what();
      }
    }
  }

  std::sort(result.rows.begin(), result.rows.end());
  result.rows.erase(std::unique(result.rows.begin(), result.rows.end()),
                    result.rows.end());
  return result;
}

std::pair<QueryResult, SelectionReport> federated_query(
    const Requester& who, const KeyRing& keys, const QuadPattern& q,
    const Aggregator& aggregator, const QueryEndpoint& endpoint,
    QueryOptions options) {
  auto snap = aggregator.snapshot();
  auto [selected, report] =
      select_sources(q, keys, snap->summary, snap->sources);
  QueryResult result = query_sources(who, q, selected, endpoint, options);
  return {std::move(result), std::move(report)};
}

}  // namespace podfed
