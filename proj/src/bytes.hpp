#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "podfed/summary.hpp"

namespace podfed::detail {

class ByteWriter {
 public:
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void text(std::string_view s) {
    raw({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void le(std::uint64_t v, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void prefixed(std::string_view s) {
    le(s.size(), 4);
    text(s);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> raw(std::size_t n) {
    if (in_.size() - pos_ < n) throw FormatError("truncated input");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t le(std::size_t width) {
    auto b = raw(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
  }
  std::string prefixed() {
    auto b = raw(le(4));
    return {b.begin(), b.end()};
  }
  void magic(std::string_view expected) {
    auto b = raw(expected.size());
    if (!std::equal(b.begin(), b.end(), expected.begin()))
      throw FormatError("bad magic, expected " + std::string(expected));
  }
  std::span<const std::uint8_t> rest() const { return in_.subspan(pos_); }
  void skip(std::size_t n) { raw(n); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

/// Reads one PPFS filter from the reader.
BloomFilter read_filter(ByteReader& r);
void write_filter(ByteWriter& w, const BloomFilter& f);

}  // namespace podfed::detail
