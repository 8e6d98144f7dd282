#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "signtrack/captions.hpp"
#include "signtrack/keyed_rng.hpp"

// Synthetic caption tracks for tests. Times sit on a 0.1 s grid so that the
// timestamp grammar represents them exactly.
namespace signtrack::testing {

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "river", "valley", "storm", "village", "bridge", "spring", "farmers", "wheat", "barley", "rain",
      "season", "towns", "decades", "measured", "crossed", "opened", "watched", "quiet", "north", "light",
      "café", "naïve", "résumé", "100", "3.5", "over", "under", "with", "the", "a"};
  return words;
}

inline std::string random_sentence(KeyedRng& rng, std::size_t words) {
  const auto& v = vocabulary();
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) s += ' ';
    s += v[rng.next_u64() % v.size()];
  }
  static const char* enders[] = {".", "!", "?", ","};
  s += enders[rng.next_u64() % 4];
  return s;
}

struct SyntheticSpec {
  double duration_s = 300.0;
  int min_caption_ds = 10;   // tenths of a second
  int max_caption_ds = 180;
  int max_gap_ds = 20;
  std::uint64_t seed = 1;
};

/// Captions of random length and gaps filling [0, duration]; the track's
/// duration is exactly spec.duration_s.
inline captions::CaptionTrack synthetic_track(const SyntheticSpec& spec) {
  KeyedRng rng(spec.seed * 0x9E3779B97F4A7C15ULL + 17);
  const auto ticks = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const int total = static_cast<int>(spec.duration_s * 10.0 + 0.5);
  std::vector<captions::Caption> caps;
  int t = ticks(0, spec.max_gap_ds);
  for (;;) {
    const int d = ticks(spec.min_caption_ds, spec.max_caption_ds);
    if (t + d > total) break;
    const std::size_t words = 2 + static_cast<std::size_t>(d / 12);
    caps.push_back({{captions::from_millis(t * 100LL), captions::from_millis((t + d) * 100LL)},
                    random_sentence(rng, words),
                    caps.size()});
    t += d + ticks(0, spec.max_gap_ds);
  }
  return captions::CaptionTrack(std::move(caps), spec.duration_s);
}

}  // namespace signtrack::testing
