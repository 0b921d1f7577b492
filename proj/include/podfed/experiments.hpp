#pragma once

#include <cstdint>
#include <string>

#include "podfed/federation.hpp"
#include "podfed/summary.hpp"

namespace podfed {

struct FprReport {
  AmfParams params;
  std::uint64_t inserts = 0;
  std::uint64_t probes = 0;
  std::uint64_t seed = 0;
  std::uint64_t positives = 0;
  double measured = 0.0;
  double estimate = 0.0;
  /// |measured - estimate| / estimate; 0 when both are 0.
  double relative_deviation = 0.0;
};

/// Inserts `inserts` random (term, key, source) triples with the dual insert
/// rule, then probes `probes` random non-members. Deterministic in `seed`.
FprReport fpr_experiment(const AmfParams& params, std::uint64_t inserts,
                         std::uint64_t probes, std::uint64_t seed);

struct LeakageReport {
  std::uint64_t restricted_terms = 0;
  std::uint64_t wrong_key_probes = 0;
  std::uint64_t wrong_key_positives = 0;
  /// Probes with PUBLIC for terms that were only ever inserted under secrets.
  std::uint64_t public_probes = 0;
  std::uint64_t public_positives = 0;
  double positive_rate = 0.0;
  /// Probe-weighted mean of the per-component false positive rate.
  double expected_fpr = 0.0;
  double bound = 0.0;  ///< 2 * expected_fpr
  std::uint64_t control_probes = 0;
  std::uint64_t control_misses = 0;
  std::uint64_t aggregator_bytes = 0;
  /// No canonical restricted term or key bytes in anything the aggregator
  /// received.
  bool plaintext_absent = true;

  bool passed() const {
    return positive_rate <= bound && control_misses == 0 && plaintext_absent;
  }
};

/// Probes the combined summary for every restricted (component, term) with
/// random wrong keys, spread over `probes` probes.
LeakageReport leakage_experiment(const Federation& fed, std::uint64_t probes,
                                 std::uint64_t seed);

}  // namespace podfed
