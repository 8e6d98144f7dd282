#include "signtrack/keyed_rng.hpp"

#include <cmath>
#include <numbers>

namespace signtrack {
namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

KeyedRng KeyedRng::for_record(std::uint64_t seed, std::string_view video_id,
                              std::uint64_t chunk_index, std::uint64_t draw_index,
                              std::string_view domain) {
  std::uint64_t k = mix64(seed + kGamma);
  k = mix64(k ^ fnv1a64(video_id));
  k = mix64(k ^ (chunk_index * kGamma));
  k = mix64(k ^ mix64(draw_index + 0x632BE59BD9B4E019ULL));
  k = mix64(k ^ fnv1a64(domain));
  return KeyedRng(k);
}

std::uint64_t KeyedRng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double KeyedRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double KeyedRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace signtrack
