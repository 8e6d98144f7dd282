#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace signtrack::captions {

/// Rounds seconds to the nearest millisecond tick.
std::int64_t to_millis(double seconds);
double from_millis(std::int64_t millis);
double quantize_millis(double seconds);

struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;

  double duration() const { return end_s - start_s; }
  bool contains(const TimeSpan& other) const {
    return other.start_s >= start_s && other.end_s <= end_s;
  }
  bool overlaps(const TimeSpan& other) const {
    return other.start_s < end_s && other.end_s > start_s;
  }
  bool valid() const;

  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

struct Caption {
  TimeSpan span;
  std::string text;
  std::size_t index = 0;

  friend bool operator==(const Caption&, const Caption&) = default;
};

/// An ordered, non-overlapping caption sequence over one video. Immutable once
/// built; construction validates every invariant and throws Error otherwise.
class CaptionTrack {
 public:
  CaptionTrack() = default;

  /// Renumbers caption indices to their position. Throws InvalidCaption,
  /// NonMonotonicTimes, OverlappingCues or InvalidTrack.
  CaptionTrack(std::vector<Caption> captions, double video_duration_s);

  /// Duration defaults to the end of the last caption.
  static CaptionTrack from_captions(std::vector<Caption> captions);

  std::span<const Caption> captions() const { return captions_; }
  std::size_t size() const { return captions_.size(); }
  bool empty() const { return captions_.empty(); }
  const Caption& operator[](std::size_t i) const { return captions_[i]; }
  double video_duration_s() const { return video_duration_s_; }

  std::vector<std::string> texts() const;

  /// Mean caption duration; 0 for an empty track.
  double mean_caption_duration() const;

  friend bool operator==(const CaptionTrack&, const CaptionTrack&) = default;

 private:
  std::vector<Caption> captions_;
  double video_duration_s_ = 0.0;
};

/// Captions of a track sorted into the three disjoint context sets around a clip.
struct WindowCaptions {
  std::vector<Caption> prev;
  std::vector<Caption> curr;
  std::vector<Caption> next;
  /// End time of the caption that straddles clip.start_s, if any.
  std::optional<double> left_edge_end_s;
};

/// curr: fully inside the clip. prev: starts in [clip.start - n, clip.start).
/// next: ends in (clip.end, clip.end + n] and is not already prev. A caption
/// covering the whole clip lands in prev and sets left_edge_end_s.
WindowCaptions classify_window_captions(std::span<const Caption> captions, const TimeSpan& clip,
                                        double context_s);

inline WindowCaptions classify_window_captions(const CaptionTrack& track, const TimeSpan& clip,
                                               double context_s) {
  return classify_window_captions(track.captions(), clip, context_s);
}

}  // namespace signtrack::captions
