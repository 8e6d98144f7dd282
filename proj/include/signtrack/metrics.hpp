#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signtrack/captions.hpp"

namespace signtrack::metrics {

using captions::Caption;
using captions::CaptionTrack;
using captions::TimeSpan;

inline constexpr std::string_view kVersion = "signtrack-0.1.0";

// ---------------------------------------------------------------------------
// BLEU

/// mteval-v14 "international" tokenization as done by sacreBLEU's intl
/// tokenizer: punctuation is split off unless it sits against a digit on the
/// relevant side, symbols are always split, whitespace is collapsed.
std::string tokenize_intl(std::string_view text);
std::vector<std::string> tokenize_intl_tokens(std::string_view text);

struct BleuReport {
  double score = 0.0;                      // 0..100
  std::array<double, 4> precisions{};      // percent
  std::array<std::size_t, 4> correct{};
  std::array<std::size_t, 4> total{};
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  std::string signature;
};

/// Corpus BLEU, one reference per segment, case-sensitive, no smoothing.
/// Throws LengthMismatch.
BleuReport corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references);

// ---------------------------------------------------------------------------
// Timed BLEU

/// Time of each code point: start + (i + 0.5) * duration / k.
std::vector<double> char_times(const Caption& caption);

/// One string per reference caption holding, in order, every hypothesis
/// character whose time falls in [ref.start, ref.end). Characters in no
/// reference span are dropped. Pieces from different hypothesis captions are
/// separated by a space and the result is whitespace-normalized.
std::vector<std::string> reslice_by_reference(std::span<const Caption> hyp, std::span<const Caption> ref);

/// corpus_bleu(reslice_by_reference(hyp, ref), ref texts).
BleuReport timed_bleu(std::span<const Caption> hyp, std::span<const Caption> ref);

/// Resliced segments for external scorers, one JSON object per line:
/// {"segment_id", "hyp_text", "ref_text"}.
std::string resliced_segments_jsonl(std::span<const std::string> hyp_segments, std::span<const Caption> ref,
                                    std::string_view video_id);

// ---------------------------------------------------------------------------
// Alignment

inline constexpr double kEvalFps = 30.0;

struct FrameCounts {
  std::size_t matching = 0;
  std::size_t total = 0;

  double accuracy() const { return total == 0 ? 1.0 : static_cast<double>(matching) / static_cast<double>(total); }
};

/// Labels the midpoint of every eval frame with the index of the caption
/// covering it, or background, under both tracks and counts agreements.
/// Throws DurationMismatch when the video durations differ by more than half
/// an eval frame.
FrameCounts frame_counts(const CaptionTrack& pred, const CaptionTrack& ref, double eval_fps = kEvalFps);

struct VideoAlignment {
  std::string video_id;
  FrameCounts counts;
};

struct AlignmentReport {
  double frame_accuracy = 0.0;
  double eval_fps = kEvalFps;
  std::vector<VideoAlignment> per_video;
};

AlignmentReport frame_accuracy(const CaptionTrack& pred, const CaptionTrack& ref, double eval_fps = kEvalFps);

/// Pools frames across videos, so longer videos weigh more.
AlignmentReport aggregate_alignment(std::vector<VideoAlignment> per_video, double eval_fps = kEvalFps);

/// Model-free baseline: caption i ends at span.start + span.duration *
/// (chars up to i / all chars). Interior boundaries are whole milliseconds and
/// the last caption ends exactly at span.end. The track duration is
/// max(span.end, video_duration_s). Throws EmptyTexts when there are no
/// characters at all.
CaptionTrack length_scaling_align(std::span<const std::string> caption_texts, const TimeSpan& span,
                                  double video_duration_s = 0.0);

// ---------------------------------------------------------------------------
// Reports

std::string to_json(const BleuReport& report, std::string_view metric);
std::string to_json(const AlignmentReport& report);

}  // namespace signtrack::metrics
