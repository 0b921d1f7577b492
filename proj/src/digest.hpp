#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace podfed::detail {

using Sha256Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update_le32(std::uint32_t v);
  Sha256& update_le64(std::uint64_t v);
  Sha256Digest finish();

 private:
  void* ctx_;
};

std::vector<std::uint8_t> random_bytes(std::size_t n);

}  // namespace podfed::detail
