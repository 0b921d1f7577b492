#include "podfed/aggregator.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>
#include <type_traits>

#include "support/oracles.hpp"

namespace podfed {
namespace {

AmfParams small_params() {
  AmfParams p;
  p.m = 4096;
  p.h = 7;
  return p;
}

FileSummary summary_of(const std::string& uri,
                       const std::vector<std::string>& literals,
                       const AmfParams& p = small_params()) {
  FileSummary s{uri, p, empty_component_filters(p)};
  for (const auto& v : literals)
    for (auto& f : s.filters) f.add(Term::literal(v), AccessKey::public_key(), uri);
  return s;
}

// In-memory stand-in for the pods: URI -> current summary.
struct FakeSources {
  std::map<std::string, FileSummary> files;
  std::set<std::string> failing;

  SummaryFetcher fetcher() {
    return [this](const std::string& uri) {
      if (failing.contains(uri)) throw std::runtime_error("unreachable: " + uri);
      return serialize_file_summary(files.at(uri));
    };
  }
  void put(const FileSummary& s) { files.insert_or_assign(s.source_uri, s); }
};

ComponentFilters direct_union(const FakeSources& src, const SourceList& uris) {
  ComponentFilters out = empty_component_filters(small_params());
  for (const auto& u : uris)
    for (std::size_t c = 0; c < 4; ++c) out[c].merge(src.files.at(u).filters[c]);
  return out;
}

// The aggregator surface only exchanges URIs and serialized summaries.
static_assert(std::is_same_v<SummaryFetcher::result_type, std::vector<std::uint8_t>>);
static_assert(std::is_same_v<decltype(&Aggregator::register_sources),
                             void (Aggregator::*)(const SourceList&)>);
static_assert(std::is_same_v<decltype(&Aggregator::on_source_changed),
                             std::shared_ptr<const AggregatorSnapshot> (Aggregator::*)(
                                 const std::string&)>);
static_assert(!std::is_constructible_v<Aggregator, AmfParams, std::vector<Quad>>);
static_assert(!std::is_constructible_v<Aggregator, AmfParams, KeyGenerator&>);

TEST(CreateAggregatedSummary, SingleSourceIsBitEqual) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1", "2"}));
  auto [combined, list] = create_aggregated_summary({"urn:a"}, src.fetcher(), small_params());
  EXPECT_EQ(list, SourceList{"urn:a"});
  EXPECT_EQ(combined.filters, src.files.at("urn:a").filters);
}

TEST(CreateAggregatedSummary, UnionAndDuplicatesDropped) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1", "2"}));
  src.put(summary_of("urn:b", {"2", "3"}));
  auto [combined, list] = create_aggregated_summary({"urn:b", "urn:a", "urn:b"},
                                                    src.fetcher(), small_params());
  EXPECT_EQ(list, (SourceList{"urn:b", "urn:a"}));
  EXPECT_EQ(combined.filters, direct_union(src, list));
  EXPECT_TRUE(combined.at(Component::kObject).contains(Term::literal("1"),
                                                       AccessKey::public_key(), "urn:a"));
}

TEST(CreateAggregatedSummary, EmptySourceListGivesEmptyFilters) {
  FakeSources src;
  auto [combined, list] = create_aggregated_summary({}, src.fetcher(), small_params());
  EXPECT_TRUE(list.empty());
  for (Component c : kComponents) EXPECT_EQ(combined.at(c).popcount(), 0u);
}

TEST(CreateAggregatedSummary, ParameterMismatchNamesSource) {
  FakeSources src;
  AmfParams other = small_params();
  other.h = 3;
  src.put(summary_of("urn:a", {"1"}));
  src.put(summary_of("urn:odd", {"1"}, other));
  try {
    create_aggregated_summary({"urn:a", "urn:odd"}, src.fetcher(), small_params());
    FAIL() << "expected IncompatibleParams";
  } catch (const IncompatibleParams& e) {
    EXPECT_NE(std::string(e.what()).find("urn:odd"), std::string::npos) << e.what();
  }
}

TEST(CreateAggregatedSummary, RejectsSummaryOfAnotherSource) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1"}));
  SummaryFetcher lying = [&](const std::string&) {
    return serialize_file_summary(src.files.at("urn:a"));
  };
  EXPECT_THROW(create_aggregated_summary({"urn:b"}, lying, small_params()), FormatError);
}

TEST(Aggregator, StartsEmpty) {
  FakeSources src;
  Aggregator agg(small_params(), src.fetcher());
  auto snap = agg.snapshot();
  EXPECT_TRUE(snap->sources.empty());
  EXPECT_FALSE(snap->stale);
  EXPECT_EQ(snap->summary.generation, 0u);
  for (Component c : kComponents) EXPECT_EQ(snap->summary.at(c).popcount(), 0u);
}

TEST(Aggregator, OnSourceChangedMatchesRebuild) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1", "2"}));
  src.put(summary_of("urn:b", {"3"}));
  Aggregator agg(small_params(), src.fetcher());
  agg.register_sources({"urn:a", "urn:b"});
  const auto g1 = agg.snapshot()->summary.generation;

  src.put(summary_of("urn:a", {"2", "9"}));
  auto snap = agg.on_source_changed("urn:a");
  EXPECT_EQ(snap->summary.generation, g1 + 1);
  EXPECT_FALSE(snap->stale);
  auto [fresh, list] = create_aggregated_summary({"urn:a", "urn:b"}, src.fetcher(),
                                                 small_params());
  EXPECT_EQ(snap->summary.filters, fresh.filters);
  EXPECT_TRUE(snap->summary.at(Component::kObject)
                  .contains(Term::literal("9"), AccessKey::public_key(), "urn:a"));
}

TEST(Aggregator, UnchangedSourceKeepsBits) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1"}));
  Aggregator agg(small_params(), src.fetcher());
  agg.register_sources({"urn:a"});
  auto before = agg.snapshot();
  auto after = agg.on_source_changed("urn:a");
  EXPECT_EQ(before->summary.filters, after->summary.filters);
}

TEST(Aggregator, UnregisteredSourceIsRejected) {
  FakeSources src;
  Aggregator agg(small_params(), src.fetcher());
  EXPECT_THROW(agg.on_source_changed("urn:nope"), std::invalid_argument);
}

TEST(Aggregator, FetchFailureMarksStaleAndKeepsSummary) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1"}));
  Aggregator agg(small_params(), src.fetcher());
  agg.register_sources({"urn:a"});
  auto before = agg.snapshot();
  src.failing.insert("urn:a");
  auto after = agg.on_source_changed("urn:a");
  EXPECT_TRUE(after->stale);
  EXPECT_EQ(after->summary.generation, before->summary.generation);
  EXPECT_EQ(after->summary.filters, before->summary.filters);
  src.failing.clear();
  EXPECT_FALSE(agg.on_source_changed("urn:a")->stale);
}

TEST(Aggregator, RegisterFailurePublishesNothing) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1"}));
  Aggregator agg(small_params(), src.fetcher());
  agg.register_sources({"urn:a"});
  EXPECT_THROW(agg.register_sources({"urn:a", "urn:missing"}), std::exception);
  EXPECT_EQ(agg.get_sources(), SourceList{"urn:a"});
}

TEST(Aggregator, RescanRebuilds) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1"}));
  Aggregator agg(small_params(), src.fetcher());
  agg.register_sources({"urn:a"});
  src.put(summary_of("urn:a", {"5"}));
  auto snap = agg.rescan();
  EXPECT_EQ(snap->summary.filters, src.files.at("urn:a").filters);
  EXPECT_GT(agg.bytes_received(), 0u);
}

TEST(Aggregator, ReadersSeeConsistentSnapshots) {
  FakeSources src;
  for (int i = 0; i < 4; ++i)
    src.put(summary_of("urn:" + std::to_string(i), {std::to_string(i)}));
  // Precompute every file version so the writer never mutates `src.files`
  // while it is being fetched.
  std::vector<std::map<std::string, FileSummary>> versions;
  for (int v = 0; v < 20; ++v) {
    auto files = src.files;
    files.insert_or_assign("urn:0", summary_of("urn:0", {"v" + std::to_string(v)}));
    versions.push_back(files);
  }
  std::atomic<int> current{0};
  SummaryFetcher fetch = [&](const std::string& uri) {
    return serialize_file_summary(versions[current.load()].at(uri));
  };
  Aggregator agg(small_params(), fetch);
  agg.register_sources({"urn:0", "urn:1", "urn:2", "urn:3"});

  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 4; ++r)
    readers.emplace_back([&] {
      while (!done) {
        auto snap = agg.snapshot();
        if (snap->sources.size() != 4) ++bad;
        for (int i = 1; i < 4; ++i)
          if (!snap->summary.at(Component::kObject)
                   .contains(Term::literal(std::to_string(i)), AccessKey::public_key()))
            ++bad;
      }
    });
  for (int v = 1; v < 20; ++v) {
    current = v;
    agg.on_source_changed("urn:0");
  }
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(agg.snapshot()->summary.generation, 20u);
}

TEST(Serialization, AggregateRoundTrip) {
  FakeSources src;
  src.put(summary_of("urn:a", {"1"}));
  src.put(summary_of("urn:b", {"2"}));
  auto [combined, list] = create_aggregated_summary({"urn:a", "urn:b"}, src.fetcher(),
                                                    small_params());
  auto bytes = serialize_aggregate(combined, list);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PPAS");
  auto [back, back_list] = deserialize_aggregate(bytes);
  EXPECT_EQ(back_list, list);
  EXPECT_EQ(back.filters, combined.filters);
  EXPECT_EQ(back.params, combined.params);
  bytes.pop_back();
  EXPECT_THROW(deserialize_aggregate(bytes), FormatError);
}

}  // namespace
}  // namespace podfed
