#pragma once

#include <cstdint>
#include <string_view>

namespace signtrack {

/// Counter-based generator: draw i of a stream is a pure function of
/// (key, i), so streams keyed by record identity are independent of
/// processing order. The mixing function is SplitMix64's finalizer; the
/// output sequence for a key equals a SplitMix64 stream seeded with that key.
class KeyedRng {
 public:
  explicit KeyedRng(std::uint64_t key) : key_(key) {}

  /// Key for (seed, video, chunk, draw) plus a domain tag separating the
  /// different consumers (clip sampling, task sampling, jitter, ...).
  static KeyedRng for_record(std::uint64_t seed, std::string_view video_id,
                             std::uint64_t chunk_index, std::uint64_t draw_index,
                             std::string_view domain);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;

}  // namespace signtrack
