// SHA-256 hashing of structured values, used for provenance keys and for
// stamping CSV outputs with a configuration digest.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dpwdm {

std::array<std::uint8_t, 32> sha256(const void* data, std::size_t len);

std::string hex_digest(const std::array<std::uint8_t, 32>& hash);

/// Accumulates a canonical byte serialization (little-endian, fixed widths)
/// of scalars for hashing; guards against accidental layout dependence.
class HashInput {
 public:
  void add_bytes(const void* data, std::size_t len);
  void add_u64(std::uint64_t v);
  void add_i64(std::int64_t v) { add_u64(static_cast<std::uint64_t>(v)); }
  void add_f64(double v);
  void add_str(const std::string& s);

  std::array<std::uint8_t, 32> digest() const;

 private:
  std::vector<std::uint8_t> buf_;
};

}  // namespace dpwdm
