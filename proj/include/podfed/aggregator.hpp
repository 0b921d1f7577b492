#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "podfed/summary.hpp"

namespace podfed {

/// Returns the PPSF bytes of a source's current summary. May throw.
///
/// The aggregator only ever sees these bytes and source URIs; no operation
/// here accepts quads, keys or policies.
using SummaryFetcher =
    std::function<std::vector<std::uint8_t>(const std::string& source_uri)>;

struct CombinedSummary {
  AmfParams params;
  ComponentFilters filters;
  std::uint64_t generation = 0;

  const BloomFilter& at(Component c) const {
    return filters[static_cast<std::size_t>(c)];
  }
};

using SourceList = std::vector<std::string>;

/// One consistent published view.
struct AggregatorSnapshot {
  CombinedSummary summary;
  SourceList sources;
  bool stale = false;
};

/// Folds summary_combine over every source's summary, component-wise.
/// Duplicates in `sources` are dropped keeping first occurrence. Throws
/// IncompatibleParams naming the offending source, or FormatError when a
/// fetched summary is malformed or describes a different source.
std::pair<CombinedSummary, SourceList> create_aggregated_summary(
    const SourceList& sources, const SummaryFetcher& fetch,
    const AmfParams& params);

/// `PPAS` v1: LE32 source count, per source LE32 length + URI, four PPFS
/// filters.
std::vector<std::uint8_t> serialize_aggregate(const CombinedSummary& s,
                                              const SourceList& sources);
std::pair<CombinedSummary, SourceList> deserialize_aggregate(
    std::span<const std::uint8_t> bytes);

/// Maintains a combined summary over registered sources. Readers get
/// immutable snapshots; updates swap a new snapshot in atomically.
class Aggregator {
 public:
  Aggregator(AmfParams params, SummaryFetcher fetch);

  /// Fetches all sources and publishes the combination. On error nothing is
  /// published.
  void register_sources(const SourceList& sources);
  /// Refetches `uri` and recombines from the per-source cache. On fetch
  /// failure the previous snapshot stays published and is marked stale.
  /// Throws std::invalid_argument for unregistered sources.
  std::shared_ptr<const AggregatorSnapshot> on_source_changed(
      const std::string& uri);
  /// Full rescan of every registered source.
  std::shared_ptr<const AggregatorSnapshot> rescan();

  std::shared_ptr<const AggregatorSnapshot> snapshot() const;
  CombinedSummary get_summary() const { return snapshot()->summary; }
  SourceList get_sources() const { return snapshot()->sources; }

  const AmfParams& params() const { return params_; }
  /// Total serialized bytes received from pods so far.
  std::uint64_t bytes_received() const;

 private:
  FileSummary fetch_checked(const std::string& uri);
  void publish_locked(bool stale);

  AmfParams params_;
  SummaryFetcher fetch_;
  mutable std::mutex update_mu_;  // serializes writers
  mutable std::mutex publish_mu_;
  SourceList sources_;
  std::map<std::string, FileSummary> cache_;
  std::uint64_t generation_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::shared_ptr<const AggregatorSnapshot> published_;
};

}  // namespace podfed
