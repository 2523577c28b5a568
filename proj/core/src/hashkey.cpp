#include "slbag/hashkey.hpp"

namespace slbag {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

std::uint64_t stream_hash(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed ^ (bytes.size() * 0x9e3779b97f4a7c15ULL);
  std::size_t i = 0;
  while (i + 8 <= bytes.size()) {
    std::uint64_t w = 0;
    for (int k = 0; k < 8; ++k) w |= std::uint64_t(std::uint8_t(bytes[i + k])) << (8 * k);
    h = mix(h ^ mix(w));
    i += 8;
  }
  std::uint64_t tail = 0;
  for (int k = 0; i < bytes.size(); ++i, ++k) tail |= std::uint64_t(std::uint8_t(bytes[i])) << (8 * k);
  return mix(h ^ mix(tail ^ 0x517cc1b727220a95ULL));
}

}  // namespace

Key128 hash128(const std::string& bytes) {
  Key128 k;
  k.a = stream_hash(bytes, 0x243f6a8885a308d3ULL);
  k.b = stream_hash(bytes, 0x13198a2e03707344ULL);
  if (k.a == 0 && k.b == 0) k.a = 1;  // keep the all-zero key reserved
  return k;
}

}  // namespace slbag
