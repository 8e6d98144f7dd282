#include "signtrack/track_stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "signtrack/error.hpp"
#include "signtrack/text.hpp"

namespace signtrack::captions {

double nearest_rank(std::span<const double> sorted, int percent) {
  if (sorted.empty()) return 0.0;
  if (percent <= 0) return sorted.front();
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

namespace {

struct Accumulator {
  std::set<int> signers;
  std::set<std::pair<int, std::string>> discourses;
  std::vector<double> lengths;
  std::vector<double> durations;

  void add(const DiscourseTrack& d) {
    signers.insert(d.signer_id);
    discourses.emplace(d.signer_id, d.article_id);
    for (const Caption& c : d.track->captions()) {
      lengths.push_back(static_cast<double>(text::char_count(c.text)));
      durations.push_back(c.span.duration());
    }
  }

  TrackStats finish() {
    TrackStats s;
    s.n_signers = signers.size();
    s.n_discourses = discourses.size();
    s.n_sentences = lengths.size();
    std::sort(lengths.begin(), lengths.end());
    // Summed in sorted order so the result does not depend on input order.
    std::sort(durations.begin(), durations.end());
    double seconds = 0.0;
    for (double d : durations) seconds += d;
    s.hours = seconds / 3600.0;
    for (std::size_t i = 0; i < kStatPercentiles.size(); ++i) {
      s.length_percentiles_chars[i] = nearest_rank(lengths, kStatPercentiles[i]);
      s.duration_percentiles_s[i] = nearest_rank(durations, kStatPercentiles[i]);
    }
    return s;
  }
};

}  // namespace

StatsTable compute_stats(std::span<const DiscourseTrack> discourses) {
  Accumulator overall;
  std::map<int, Accumulator> per_signer;
  for (const DiscourseTrack& d : discourses) {
    if (d.track == nullptr) continue;
    overall.add(d);
    per_signer[d.signer_id].add(d);
  }
  if (overall.lengths.empty()) throw Error(Errc::EmptyInput, "no captions to summarize");

  StatsTable table;
  table.overall = overall.finish();
  for (auto& [signer, acc] : per_signer) table.by_signer[signer] = acc.finish();
  return table;
}

}  // namespace signtrack::captions
