#include "podfed/aggregator.hpp"

#include <algorithm>
#include <set>

#include "bytes.hpp"

namespace podfed {

namespace {

SourceList dedup(const SourceList& in) {
  SourceList out;
  std::set<std::string> seen;
  for (const auto& u : in)
    if (seen.insert(u).second) out.push_back(u);
  return out;
}

FileSummary decode_for(const std::string& uri,
                       const std::vector<std::uint8_t>& bytes,
                       const AmfParams& params) {
  FileSummary s = deserialize_file_summary(bytes);
  if (s.source_uri != uri)
    throw FormatError("summary fetched from " + uri + " describes " +
                      s.source_uri);
  if (s.params != params) throw IncompatibleParams(params, s.params, uri);
  return s;
}

ComponentFilters fold(const SourceList& sources,
                      const std::map<std::string, FileSummary>& cache,
                      const AmfParams& params) {
  ComponentFilters out = empty_component_filters(params);
  for (const auto& u : sources) {
    const FileSummary& s = cache.at(u);
    for (std::size_t c = 0; c < out.size(); ++c) out[c].merge(s.filters[c]);
  }
  return out;
}

}  // namespace

std::pair<CombinedSummary, SourceList> create_aggregated_summary(
    const SourceList& sources, const SummaryFetcher& fetch,
    const AmfParams& params) {
  params.validate();
  SourceList list = dedup(sources);
  CombinedSummary combined{params, empty_component_filters(params), 0};
  for (const auto& u : list) {
    FileSummary s = decode_for(u, fetch(u), params);
    for (std::size_t c = 0; c < combined.filters.size(); ++c)
      combined.filters[c] = summary_combine(combined.filters[c], s.filters[c]);
  }
  return {std::move(combined), std::move(list)};
}

std::vector<std::uint8_t> serialize_aggregate(const CombinedSummary& s,
                                              const SourceList& sources) {
  detail::ByteWriter w;
  w.text("PPAS");
  w.u8(1);
  w.le(sources.size(), 4);
  for (const auto& u : sources) w.prefixed(u);
  for (const auto& f : s.filters) detail::write_filter(w, f);
  return w.take();
}

std::pair<CombinedSummary, SourceList> deserialize_aggregate(
    std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.magic("PPAS");
  if (r.le(1) != 1) throw FormatError("unsupported PPAS version");
  std::uint64_t n = r.le(4);
  if (n > r.rest().size() / 4) throw FormatError("truncated source list");
  SourceList sources;
  for (std::uint64_t i = 0; i < n; ++i) sources.push_back(r.prefixed());
  BloomFilter s = detail::read_filter(r);
  BloomFilter p = detail::read_filter(r);
  BloomFilter o = detail::read_filter(r);
  BloomFilter g = detail::read_filter(r);
  if (!r.done()) throw FormatError("trailing bytes after PPAS summary");
  const AmfParams params = s.params();
  for (const BloomFilter* f : {&p, &o, &g})
    if (f->params() != params)
      throw FormatError("PPAS components disagree on parameters");
  return {CombinedSummary{params,
                          {std::move(s), std::move(p), std::move(o),
                           std::move(g)},
                          0},
          std::move(sources)};
}

Aggregator::Aggregator(AmfParams params, SummaryFetcher fetch)
    : params_(params), fetch_(std::move(fetch)) {
  params_.validate();
  std::lock_guard lock(update_mu_);
  publish_locked(false);
}

FileSummary Aggregator::fetch_checked(const std::string& uri) {
  std::vector<std::uint8_t> bytes = fetch_(uri);
  bytes_received_ += bytes.size();
  return decode_for(uri, bytes, params_);
}

void Aggregator::publish_locked(bool stale) {
  auto snap = std::make_shared<const AggregatorSnapshot>(AggregatorSnapshot{
      CombinedSummary{params_, fold(sources_, cache_, params_), generation_},
      sources_, stale});
  std::lock_guard lock(publish_mu_);
  published_ = std::move(snap);
}

void Aggregator::register_sources(const SourceList& sources) {
  std::lock_guard lock(update_mu_);
  SourceList list = dedup(sources);
  std::map<std::string, FileSummary> cache;
  for (const auto& u : list) cache.emplace(u, fetch_checked(u));
  sources_ = std::move(list);
  cache_ = std::move(cache);
  ++generation_;
  publish_locked(false);
}

std::shared_ptr<const AggregatorSnapshot> Aggregator::on_source_changed(
    const std::string& uri) {
  std::lock_guard lock(update_mu_);
  if (!cache_.contains(uri))
    throw std::invalid_argument("source not registered: " + uri);
  try {
    cache_.insert_or_assign(uri, fetch_checked(uri));
  } catch (const std::exception&) {
    auto current = snapshot();
    auto stale = std::make_shared<AggregatorSnapshot>(*current);
    stale->stale = true;
    std::lock_guard pub(publish_mu_);
    published_ = stale;
    return stale;
  }
  ++generation_;
  publish_locked(false);
  return snapshot();
}

std::shared_ptr<const AggregatorSnapshot> Aggregator::rescan() {
  std::lock_guard lock(update_mu_);
  std::map<std::string, FileSummary> cache;
  try {
    for (const auto& u : sources_) cache.emplace(u, fetch_checked(u));
  } catch (const std::exception&) {
    auto stale = std::make_shared<AggregatorSnapshot>(*snapshot());
    stale->stale = true;
    std::lock_guard pub(publish_mu_);
    published_ = stale;
    return stale;
  }
  cache_ = std::move(cache);
  ++generation_;
  publish_locked(false);
  return snapshot();
}

std::shared_ptr<const AggregatorSnapshot> Aggregator::snapshot() const {
  std::lock_guard lock(publish_mu_);
  return published_;
}

std::uint64_t Aggregator::bytes_received() const {
  std::lock_guard lock(update_mu_);
  return bytes_received_;
}

}  // namespace podfed
