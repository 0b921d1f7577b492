#include "podfed/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

namespace podfed {

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> random_block(std::mt19937_64& rng) {
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; i += 8) {
    std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8 && i + j < N; ++j)
      out[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
  }
  return out;
}

struct InsertedElement {
  Component component;
  Term term;
  AccessKey key;
  std::string source;
};

bool contains_bytes(const std::vector<std::uint8_t>& haystack,
                    std::span<const std::uint8_t> needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(),
                     std::boyer_moore_searcher(needle.begin(), needle.end())) !=
         haystack.end();
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

FprReport fpr_experiment(const AmfParams& params, std::uint64_t inserts,
                         std::uint64_t probes, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  BloomFilter filter(params);
  std::set<std::array<std::uint8_t, 16>> members;
  static constexpr std::size_t kSources = 8;
  auto source_name = [](std::uint64_t i) {
    return "urn:podfed:fpr:source/" + std::to_string(i % kSources);
  };

  for (std::uint64_t i = 0; i < inserts; ++i) {
    auto value = random_block<16>(rng);
    auto key = random_block<32>(rng);
    members.insert(value);
    const std::string source = source_name(rng());
    filter.insert(encode_element(value, key, source));
    filter.insert(encode_element(value, key, kAnySource));
  }

  FprReport report;
  report.params = params;
  report.inserts = inserts;
  report.probes = probes;
  report.seed = seed;
  for (std::uint64_t i = 0; i < probes; ++i) {
    auto value = random_block<16>(rng);
    while (members.contains(value)) value = random_block<16>(rng);
    auto key = random_block<32>(rng);
    const std::string source = (i % 2 == 0) ? std::string() : source_name(rng());
    if (filter.may_contain(encode_element(value, key, source)))
      ++report.positives;
  }
  report.measured =
      probes == 0 ? 0.0 : static_cast<double>(report.positives) / probes;
  report.estimate = false_positive_estimate(params, inserts);
  report.relative_deviation =
      report.estimate == 0.0
          ? (report.measured == 0.0 ? 0.0 : INFINITY)
          : std::abs(report.measured - report.estimate) / report.estimate;
  return report;
}

LeakageReport leakage_experiment(const Federation& fed, std::uint64_t probes,
                                 std::uint64_t seed) {
  const AmfParams& params = fed.params();
  const SourceList sources = fed.aggregator().get_sources();

  // Everything the pods inserted, seen from the pods' side.
  std::vector<InsertedElement> restricted;
  std::set<std::pair<Component, Term>> public_terms;
  std::array<std::set<ElementDigest>, 4> elements;
  std::set<AccessKey> secret_keys;
  for (const auto& u : sources) {
    const Pod* pod = fed.pod_for_file(u);
    auto file = pod ? pod->file(u) : nullptr;
    if (!file) continue;
    for (const Quad& q : file->quads) {
      for (const AccessKey& k : file->qpk.keys(q)) {
        if (!k.is_public()) secret_keys.insert(k);
        for (Component c : kComponents) {
          const Term& t = q.at(c);
          auto& set = elements[static_cast<std::size_t>(c)];
          set.insert(encode_element(t, k, u));
          set.insert(encode_element(t, k, kAnySource));
          if (k.is_public())
            public_terms.emplace(c, t);
          else
            restricted.push_back({c, t, k, u});
        }
      }
    }
  }
  std::array<double, 4> component_fpr{};
  for (std::size_t c = 0; c < 4; ++c)
    component_fpr[c] =
        false_positive_rate(params, static_cast<double>(elements[c].size()));

  LeakageReport report;
  std::set<std::pair<Component, Term>> restricted_terms;
  for (const auto& e : restricted) restricted_terms.emplace(e.component, e.term);
  report.restricted_terms = restricted_terms.size();

  const auto snap = fed.aggregator().snapshot();
  const CombinedSummary& summary = snap->summary;
  std::mt19937_64 rng(seed);
  double expected_sum = 0.0;

  if (!restricted.empty()) {
    for (std::uint64_t i = 0; i < probes; ++i) {
      const InsertedElement& e = restricted[i % restricted.size()];
      AccessKey wrong = AccessKey::secret([&] {
        auto b = random_block<32>(rng);
        return std::vector<std::uint8_t>(b.begin(), b.end());
      }());
      if (secret_keys.contains(wrong)) continue;
      const bool wildcard = (i / restricted.size()) % 2 == 0;
      ++report.wrong_key_probes;
      expected_sum += component_fpr[static_cast<std::size_t>(e.component)];
      if (summary.at(e.component)
              .contains(e.term, wrong, wildcard ? kAnySource : e.source))
        ++report.wrong_key_positives;
    }
  }

  // Unauthenticated arm: PUBLIC key against restricted-only terms.
  const AccessKey pub = AccessKey::public_key();
  for (const auto& [c, t] : restricted_terms) {
    if (public_terms.contains({c, t})) continue;
    std::vector<std::string> targets{std::string(kAnySource)};
    targets.insert(targets.end(), sources.begin(), sources.end());
    for (const auto& u : targets) {
      ++report.public_probes;
      expected_sum += component_fpr[static_cast<std::size_t>(c)];
      if (summary.at(c).contains(t, pub, u)) ++report.public_positives;
    }
  }

  const std::uint64_t total = report.wrong_key_probes + report.public_probes;
  if (total > 0) {
    report.positive_rate =
        static_cast<double>(report.wrong_key_positives +
                            report.public_positives) /
        static_cast<double>(total);
    report.expected_fpr = expected_sum / static_cast<double>(total);
  }
  report.bound = 2.0 * report.expected_fpr;

  // Control arm: the right key always matches.
  for (const auto& e : restricted) {
    report.control_probes += 2;
    const BloomFilter& f = summary.at(e.component);
    if (!f.contains(e.term, e.key, e.source)) ++report.control_misses;
    if (!f.contains(e.term, e.key, kAnySource)) ++report.control_misses;
  }

  // Replay the aggregator's inputs and look for plaintext in them.
  std::vector<std::uint8_t> received;
  Aggregator recorder(params, [&](const std::string& uri) {
    const Pod* pod = fed.pod_for_file(uri);
    if (!pod) throw FileNotFound(uri);
    auto bytes = pod->serialized_summary(uri);
    received.insert(received.end(), bytes.begin(), bytes.end());
    return bytes;
  });
  recorder.register_sources(sources);
  report.aggregator_bytes = received.size();

  auto is_public_metadata = [&](const std::string& needle) {
    return std::any_of(sources.begin(), sources.end(), [&](const auto& u) {
      return u.find(needle) != std::string::npos;
    });
  };
  for (const auto& [c, t] : restricted_terms) {
    for (const std::string& needle : {canonical_bytes(t), t.value()}) {
      if (needle.size() < 4 || is_public_metadata(needle)) continue;
      if (contains_bytes(received, as_bytes(needle))) report.plaintext_absent = false;
    }
  }
  for (const AccessKey& k : secret_keys)
    if (contains_bytes(received, k.bytes())) report.plaintext_absent = false;
  return report;
}

}  // namespace podfed
