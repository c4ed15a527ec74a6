#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace stcl {

/// 64-bit FNV-1a, used for content fingerprints (not for integrity).
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001B3ull;
    }
  }
  void add_string(std::string_view s) {
    add_value(static_cast<std::uint64_t>(s.size()));
    add_bytes(s.data(), s.size());
  }
  template <typename V>
  void add_value(V v) {
    unsigned char buf[sizeof(V)];
    std::memcpy(buf, &v, sizeof(V));
    add_bytes(buf, sizeof(V));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ull;
};

}  // namespace stcl
