#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "podfed/policy.hpp"
#include "podfed/quad.hpp"

namespace podfed {

/// The wildcard source: matches elements inserted for any source.
inline constexpr std::string_view kAnySource{};

struct AmfParams {
  static constexpr std::uint8_t kSha256 = 1;

  std::uint64_t m = 1u << 17;  ///< bits
  std::uint32_t h = 11;        ///< probes
  std::uint8_t hash_alg = kSha256;

  /// Throws std::invalid_argument when m < 8, h == 0, h > 65535 or the hash
  /// algorithm is unknown.
  void validate() const;
  std::string describe() const;

  friend bool operator==(const AmfParams&, const AmfParams&) = default;
};

class IncompatibleParams : public std::invalid_argument {
 public:
  IncompatibleParams(const AmfParams& a, const AmfParams& b,
                     const std::string& context = {});
};

/// SHA-256 over the length-prefixed (component, key, source) triple.
using ElementDigest = std::array<std::uint8_t, 32>;

ElementDigest encode_element(std::span<const std::uint8_t> component,
                             std::span<const std::uint8_t> key,
                             std::string_view source);
ElementDigest encode_element(const Term& t, const AccessKey& k,
                             std::string_view source);

/// Bit indices probed for `d`: (h1 + i*h2) mod m, h2 forced odd.
std::vector<std::uint64_t> probe_indices(const ElementDigest& d,
                                         const AmfParams& params);

class BloomFilter {
 public:
  explicit BloomFilter(const AmfParams& params);

  const AmfParams& params() const { return params_; }
  /// ceil(m/8) bytes; bit j is bit (j & 7) of byte (j >> 3).
  std::span<const std::uint8_t> bitmap() const { return bits_; }
  std::uint64_t popcount() const;
  bool test_bit(std::uint64_t j) const {
    return (bits_[j >> 3] >> (j & 7)) & 1u;
  }

  void insert(const ElementDigest& d);
  bool may_contain(const ElementDigest& d) const;

  /// Inserts (t, k, source) and (t, k, ε). `source` must be non-empty.
  BloomFilter& add(const Term& t, const AccessKey& k, std::string_view source);
  /// No false negatives; false positives at the filter's current rate.
  bool contains(const Term& t, const AccessKey& k,
                std::string_view source = kAnySource) const;

  /// In-place bitwise OR. Throws IncompatibleParams.
  BloomFilter& merge(const BloomFilter& other);

  static BloomFilter from_bitmap(const AmfParams& params,
                                 std::vector<std::uint8_t> bits);

  friend bool operator==(const BloomFilter&, const BloomFilter&) = default;

 private:
  AmfParams params_;
  std::vector<std::uint8_t> bits_;
};

BloomFilter summary_initialize(const AmfParams& params);
BloomFilter summary_combine(const BloomFilter& a, const BloomFilter& b);

/// Four filters, one per quad component.
using ComponentFilters = std::array<BloomFilter, 4>;

ComponentFilters empty_component_filters(const AmfParams& params);

struct FileSummary {
  std::string source_uri;
  AmfParams params;
  ComponentFilters filters;

  const BloomFilter& at(Component c) const {
    return filters[static_cast<std::size_t>(c)];
  }
  friend bool operator==(const FileSummary&, const FileSummary&) = default;
};

/// Summarizes every governed quad under each of its permit keys. Quads the
/// map does not govern are skipped.
FileSummary create_file_summary(std::span<const Quad> quads,
                                std::string_view uri, const PolicyKeyMap& qpk,
                                const AmfParams& params);

/// (1 - e^{-h * n_elements / m})^h.
double false_positive_rate(const AmfParams& params, double n_elements);
/// Same rate for `n` dual inserts (2n elements).
double false_positive_estimate(const AmfParams& params, std::uint64_t n);

// Binary formats. All integers little-endian.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `PPFS` v1: alg (1), h (2), m (8), bitmap.
std::vector<std::uint8_t> serialize_filter(const BloomFilter& f);
BloomFilter deserialize_filter(std::span<const std::uint8_t> bytes);

/// `PPSF` v1: LE32 URI length, URI, four PPFS filters.
std::vector<std::uint8_t> serialize_file_summary(const FileSummary& s);
FileSummary deserialize_file_summary(std::span<const std::uint8_t> bytes);

}  // namespace podfed
