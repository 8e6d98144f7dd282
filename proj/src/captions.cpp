#include "signtrack/captions.hpp"

#include <cmath>

#include "signtrack/error.hpp"
#include "signtrack/text.hpp"

namespace signtrack::captions {

std::int64_t to_millis(double seconds) { return std::llround(seconds * 1000.0); }
double from_millis(std::int64_t millis) { return static_cast<double>(millis) / 1000.0; }
double quantize_millis(double seconds) { return from_millis(to_millis(seconds)); }

bool TimeSpan::valid() const {
  return std::isfinite(start_s) && std::isfinite(end_s) && start_s >= 0.0 && start_s <= end_s;
}

CaptionTrack::CaptionTrack(std::vector<Caption> captions, double video_duration_s)
    : captions_(std::move(captions)), video_duration_s_(video_duration_s) {
  if (!std::isfinite(video_duration_s_) || video_duration_s_ < 0.0) {
    throw Error(Errc::InvalidTrack, "video duration must be finite and non-negative");
  }
  for (std::size_t i = 0; i < captions_.size(); ++i) {
    Caption& c = captions_[i];
    c.index = i;
    if (!c.span.valid()) {
      throw Error(Errc::NonMonotonicTimes,
                  "caption " + std::to_string(i) + " has an invalid span");
    }
    if (text::is_blank(c.text)) {
      throw Error(Errc::InvalidCaption, "caption " + std::to_string(i) + " has empty text");
    }
    if (c.span.end_s > video_duration_s_) {
      throw Error(Errc::InvalidTrack,
                  "caption " + std::to_string(i) + " ends after the video duration");
    }
    if (i > 0) {
      const Caption& prev = captions_[i - 1];
      if (c.span.start_s < prev.span.start_s) {
        throw Error(Errc::NonMonotonicTimes,
                    "caption " + std::to_string(i) + " starts before caption " +
                        std::to_string(i - 1));
      }
      if (c.span.start_s < prev.span.end_s) {
        throw Error(Errc::OverlappingCues, "captions " + std::to_string(i - 1) + " and " +
                                               std::to_string(i) + " overlap");
      }
    }
  }
}

CaptionTrack CaptionTrack::from_captions(std::vector<Caption> captions) {
  const double duration = captions.empty() ? 0.0 : captions.back().span.end_s;
  return CaptionTrack(std::move(captions), duration);
}

std::vector<std::string> CaptionTrack::texts() const {
  std::vector<std::string> out;
  out.reserve(captions_.size());
  for (const auto& c : captions_) out.push_back(c.text);
  return out;
}

double CaptionTrack::mean_caption_duration() const {
  if (captions_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : captions_) total += c.span.duration();
  return total / static_cast<double>(captions_.size());
}

WindowCaptions classify_window_captions(std::span<const Caption> captions, const TimeSpan& clip,
                                        double context_s) {
  WindowCaptions out;
  for (const Caption& c : captions) {
    const TimeSpan& s = c.span;
    if (s.start_s < clip.start_s && s.end_s > clip.start_s) out.left_edge_end_s = s.end_s;

    if (clip.contains(s)) {
      out.curr.push_back(c);
    } else if (s.start_s >= clip.start_s - context_s && s.start_s < clip.start_s) {
      out.prev.push_back(c);
    } else if (s.end_s > clip.end_s && s.end_s <= clip.end_s + context_s) {
      out.next.push_back(c);
    }
  }
  return out;
}

}  // namespace signtrack::captions
