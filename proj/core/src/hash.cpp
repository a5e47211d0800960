#include "dpwdm/hash.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "dpwdm/common.hpp"

namespace dpwdm {

std::array<std::uint8_t, 32> sha256(const void* data, std::size_t len) {
  std::array<std::uint8_t, 32> out{};
  unsigned int out_len = 0;
  if (!EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) ||
      out_len != out.size())
    throw Error("sha256: digest failed");
  return out;
}

std::string hex_digest(const std::array<std::uint8_t, 32>& hash) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : hash) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xf]);
  }
  return s;
}

void HashInput::add_bytes(const void* data, std::size_t len) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  buf_.insert(buf_.end(), p, p + len);
}

void HashInput::add_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void HashInput::add_f64(double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  add_u64(bits);
}

void HashInput::add_str(const std::string& s) {
  add_u64(s.size());
  add_bytes(s.data(), s.size());
}

std::array<std::uint8_t, 32> HashInput::digest() const {
  return sha256(buf_.data(), buf_.size());
}

}  // namespace dpwdm
