#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace activemask::detail {

/// 128-bit content hash built from two independent 64-bit streams.
struct Hash128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend bool operator==(const Hash128&, const Hash128&) = default;
};

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

template <class T>
Hash128 hash128(std::span<const T> data) {
  std::uint64_t a = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
  std::uint64_t b = 0x9e3779b97f4a7c15ULL;
  for (const T& v : data) {
    const auto x = static_cast<std::uint64_t>(v);
    a = (a ^ x) * 0x100000001b3ULL;
    b = mix64(b + x + 0x632be59bd9b4e019ULL);
  }
  return {mix64(a ^ data.size()), b};
}

struct Hash128Hasher {
  std::size_t operator()(const Hash128& h) const noexcept { return static_cast<std::size_t>(h.hi ^ (h.lo * 31)); }
};

}  // namespace activemask::detail
