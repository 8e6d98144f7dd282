#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "signtrack/captions.hpp"

namespace signtrack::captions {

enum class SubtitleFormat { vtt, srt };

/// Picks the format from a path's extension (".vtt" / ".srt").
std::optional<SubtitleFormat> format_from_path(std::string_view path);

/// Parses a WebVTT or SRT file. Cue times are exact to the millisecond. The
/// track duration is the later of the last cue end and `video_duration_s`.
/// Errors: MalformedCue (with line:col), OverlappingCues, NonMonotonicTimes.
CaptionTrack parse_caption_file(std::string_view bytes, SubtitleFormat format,
                                std::optional<double> video_duration_s = std::nullopt);

/// Writes a track that parse_caption_file reads back identically (to the ms).
/// VTT escapes '&', '<' and '>' so "-->" can never appear in cue text; SRT
/// writes text verbatim. Text that cannot be represented (blank lines,
/// carriage returns) is rejected with InvalidCaption rather than altered.
/// `note` is emitted as a VTT NOTE block (ignored for SRT).
std::string serialize_caption_file(const CaptionTrack& track, SubtitleFormat format,
                                   std::string_view note = {});

/// "hh:mm:ss.mmm" (VTT) or "hh:mm:ss,mmm" (SRT).
std::string format_cue_time(double seconds, SubtitleFormat format);

}  // namespace signtrack::captions
