#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "signtrack/captions.hpp"

namespace signtrack::captions {

inline constexpr std::array<int, 5> kStatPercentiles = {0, 10, 50, 90, 100};

struct TrackStats {
  std::size_t n_signers = 0;
  std::size_t n_discourses = 0;
  std::size_t n_sentences = 0;
  std::array<double, 5> length_percentiles_chars{};
  std::array<double, 5> duration_percentiles_s{};
  double hours = 0.0;
};

/// One captioned discourse (article) performed by one signer.
struct DiscourseTrack {
  int signer_id = 0;
  std::string article_id;
  const CaptionTrack* track = nullptr;
};

struct StatsTable {
  TrackStats overall;
  std::map<int, TrackStats> by_signer;
};

/// Nearest-rank percentile of sorted values: p=0 is the minimum, p=100 the maximum.
double nearest_rank(std::span<const double> sorted, int percent);

/// Table-1 style summary. Discourses are counted as distinct (signer, article)
/// pairs; hours are the summed caption durations. Throws EmptyInput when no
/// discourse carries a caption.
StatsTable compute_stats(std::span<const DiscourseTrack> discourses);

}  // namespace signtrack::captions
