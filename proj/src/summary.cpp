#include "podfed/summary.hpp"

#include <bit>
#include <cmath>

#include "bytes.hpp"
#include "digest.hpp"

namespace podfed {

namespace {

constexpr std::uint8_t kFormatVersion = 1;

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

}  // namespace

void AmfParams::validate() const {
  if (m < 8) throw std::invalid_argument("bloom filter needs m >= 8 bits");
  if (h == 0 || h > 0xffff)
    throw std::invalid_argument("bloom filter needs 1 <= h <= 65535");
  if (hash_alg != kSha256)
    throw std::invalid_argument("unknown hash algorithm id " +
                                std::to_string(hash_alg));
}

std::string AmfParams::describe() const {
  return "(m=" + std::to_string(m) + ", h=" + std::to_string(h) +
         ", alg=" + std::to_string(hash_alg) + ")";
}

IncompatibleParams::IncompatibleParams(const AmfParams& a, const AmfParams& b,
                                       const std::string& context)
    : std::invalid_argument((context.empty() ? "" : context + ": ") +
                            "incompatible summary parameters " + a.describe() +
                            " vs " + b.describe()) {}

ElementDigest encode_element(std::span<const std::uint8_t> component,
                             std::span<const std::uint8_t> key,
                             std::string_view source) {
  detail::Sha256 h;
  h.update_le32(static_cast<std::uint32_t>(component.size())).update(component);
  h.update_le32(static_cast<std::uint32_t>(key.size())).update(key);
  h.update_le32(static_cast<std::uint32_t>(source.size())).update(as_bytes(source));
  return h.finish();
}

ElementDigest encode_element(const Term& t, const AccessKey& k,
                             std::string_view source) {
  std::string c = canonical_bytes(t);
  return encode_element(as_bytes(c), k.bytes(), source);
}

std::vector<std::uint64_t> probe_indices(const ElementDigest& d,
                                         const AmfParams& params) {
  const std::uint64_t h1 = load_le64(d.data());
  const std::uint64_t h2 = load_le64(d.data() + 8) | 1u;
  std::vector<std::uint64_t> out(params.h);
  // (h1 + i*h2) mod m, computed without overflow.
  std::uint64_t pos = h1 % params.m;
  const std::uint64_t step = h2 % params.m;
  for (std::uint32_t i = 0; i < params.h; ++i) {
    out[i] = pos;
    pos = (pos >= params.m - step) ? pos - (params.m - step) : pos + step;
  }
  return out;
}

BloomFilter::BloomFilter(const AmfParams& params) : params_(params) {
  params_.validate();
  bits_.assign((params_.m + 7) / 8, 0);
}

std::uint64_t BloomFilter::popcount() const {
  std::uint64_t n = 0;
  for (std::uint8_t b : bits_) n += static_cast<std::uint64_t>(std::popcount(b));
  return n;
}

void BloomFilter::insert(const ElementDigest& d) {
  for (std::uint64_t j : probe_indices(d, params_))
    bits_[j >> 3] |= static_cast<std::uint8_t>(1u << (j & 7));
}

bool BloomFilter::may_contain(const ElementDigest& d) const {
  for (std::uint64_t j : probe_indices(d, params_))
    if (!test_bit(j)) return false;
  return true;
}

BloomFilter& BloomFilter::add(const Term& t, const AccessKey& k,
                              std::string_view source) {
  if (source.empty())
    throw std::invalid_argument("add requires a concrete source URI");
  std::string c = canonical_bytes(t);
  insert(encode_element(as_bytes(c), k.bytes(), source));
  insert(encode_element(as_bytes(c), k.bytes(), kAnySource));
  return *this;
}

bool BloomFilter::contains(const Term& t, const AccessKey& k,
                           std::string_view source) const {
  return may_contain(encode_element(t, k, source));
}

BloomFilter& BloomFilter::merge(const BloomFilter& other) {
  if (other.params_ != params_) throw IncompatibleParams(params_, other.params_);
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

BloomFilter BloomFilter::from_bitmap(const AmfParams& params,
                                     std::vector<std::uint8_t> bits) {
  BloomFilter f(params);
  if (bits.size() != f.bits_.size())
    throw FormatError("bitmap size does not match m");
  if (params.m % 8 != 0 && (bits.back() >> (params.m % 8)) != 0)
    throw FormatError("bits set beyond m");
  f.bits_ = std::move(bits);
  return f;
}

BloomFilter summary_initialize(const AmfParams& params) {
  return BloomFilter(params);
}

BloomFilter summary_combine(const BloomFilter& a, const BloomFilter& b) {
  BloomFilter out = a;
  out.merge(b);
  return out;
}

ComponentFilters empty_component_filters(const AmfParams& params) {
  return {BloomFilter(params), BloomFilter(params), BloomFilter(params),
          BloomFilter(params)};
}

FileSummary create_file_summary(std::span<const Quad> quads,
                                std::string_view uri, const PolicyKeyMap& qpk,
                                const AmfParams& params) {
  FileSummary s{std::string(uri), params, empty_component_filters(params)};
  for (const Quad& q : quads) {
    for (const AccessKey& k : qpk.keys(q)) {
      for (Component c : kComponents)
        s.filters[static_cast<std::size_t>(c)].add(q.at(c), k, uri);
    }
  }
  return s;
}

double false_positive_rate(const AmfParams& params, double n_elements) {
  if (n_elements <= 0) return 0.0;
  const double h = params.h;
  return std::pow(1.0 - std::exp(-h * n_elements / static_cast<double>(params.m)), h);
}

double false_positive_estimate(const AmfParams& params, std::uint64_t n) {
  return false_positive_rate(params, 2.0 * static_cast<double>(n));
}

namespace detail {

void write_filter(ByteWriter& w, const BloomFilter& f) {
  w.text("PPFS");
  w.u8(kFormatVersion);
  w.u8(f.params().hash_alg);
  w.le(f.params().h, 2);
  w.le(f.params().m, 8);
  w.raw(f.bitmap());
}

BloomFilter read_filter(ByteReader& r) {
  r.magic("PPFS");
  if (r.le(1) != kFormatVersion) throw FormatError("unsupported PPFS version");
  AmfParams p;
  p.hash_alg = static_cast<std::uint8_t>(r.le(1));
  p.h = static_cast<std::uint32_t>(r.le(2));
  p.m = r.le(8);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  if (p.m / 8 > r.rest().size()) throw FormatError("truncated bitmap");
  auto bits = r.raw((p.m + 7) / 8);
  return BloomFilter::from_bitmap(p, {bits.begin(), bits.end()});
}

}  // namespace detail

std::vector<std::uint8_t> serialize_filter(const BloomFilter& f) {
  detail::ByteWriter w;
  detail::write_filter(w, f);
  return w.take();
}

BloomFilter deserialize_filter(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  BloomFilter f = detail::read_filter(r);
  if (!r.done()) throw FormatError("trailing bytes after PPFS filter");
  return f;
}

std::vector<std::uint8_t> serialize_file_summary(const FileSummary& s) {
  detail::ByteWriter w;
  w.text("PPSF");
  w.u8(kFormatVersion);
  w.prefixed(s.source_uri);
  for (const auto& f : s.filters) detail::write_filter(w, f);
  return w.take();
}

FileSummary deserialize_file_summary(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.magic("PPSF");
  if (r.le(1) != kFormatVersion) throw FormatError("unsupported PPSF version");
  std::string uri = r.prefixed();
  BloomFilter s = detail::read_filter(r);
  BloomFilter p = detail::read_filter(r);
  BloomFilter o = detail::read_filter(r);
  BloomFilter g = detail::read_filter(r);
  if (!r.done()) throw FormatError("trailing bytes after PPSF summary");
  const AmfParams params = s.params();
  for (const BloomFilter* f : {&p, &o, &g})
    if (f->params() != params)
      throw FormatError("PPSF components disagree on parameters");
  return FileSummary{std::move(uri), params,
                     {std::move(s), std::move(p), std::move(o), std::move(g)}};
}

}  // namespace podfed
