#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signtrack/captions.hpp"
#include "signtrack/feature_track.hpp"
#include "signtrack/task_grammar.hpp"
#include "signtrack/translator.hpp"

// Chunked autoregression: a long video is decoded one window at a time and
// each window starts where the previous one's trustworthy output ended.
namespace signtrack::driver {

struct DriverConfig {
  double window_s = 34.0;
  /// Captions may not start in the first head_margin_s of a window or end in
  /// its last tail_margin_s, except at the start and end of the video.
  double head_margin_s = 4.0;
  double tail_margin_s = 10.0;
  double fallback_stride_s = 20.0;
  std::size_t context_budget = 256;
  /// Guard against windows that never make real progress; 0 picks
  /// ceil(duration) + 16.
  std::size_t max_windows = 0;
  /// Alignment stops when a window's accepted lines differ from the expected
  /// captions by more than this normalized edit distance.
  double decoherence_threshold = 0.5;
  /// Sent as <|avgdur:x|> with timed translation requests when set.
  std::optional<double> avg_duration_s;

  /// Throws InvalidConfig unless 0 <= head, 0 <= tail, head + tail < window
  /// and fallback_stride > 0.
  void validate() const;
  std::size_t window_cap(double duration_s) const;
};

enum class AdvanceReason {
  first_rejected,  // restart just before the first caption that was not accepted
  last_accepted,   // restart just before the end of the last accepted caption
  fallback,        // nothing usable, move by fallback_stride_s
  finished,        // window reached the end of the video, or nothing left to align
};

std::string_view to_string(AdvanceReason r) noexcept;

struct WindowRecord {
  TimeSpan window;
  std::string input_text;
  std::string output_text;
  std::vector<Caption> accepted;
  /// Parsed lines that were not accepted, and lines that did not parse.
  std::vector<grammar::TimedLine> rejected;
  std::vector<grammar::LineDiagnostic> diagnostics;
  AdvanceReason reason = AdvanceReason::finished;
};

struct DecodeTrace {
  std::vector<WindowRecord> windows;
};

/// One JSON object per window.
std::string to_jsonl(const DecodeTrace& trace, std::string_view video_id);

struct TimedResult {
  CaptionTrack track;
  DecodeTrace trace;
};

/// Timed discourse translation over [0, duration_s]. `duration_s` defaults
/// to the feature track's duration. Throws TranslatorFailure (with the window
/// span) and LivelockGuardTripped.
TimedResult run_timed_translation(const FeatureTrack& features, TranslatorPort& translator,
                                  const DriverConfig& cfg, const grammar::TimestampGrammar& grammar,
                                  std::optional<double> duration_s = std::nullopt);

struct UntimedResult {
  std::string text;
  DecodeTrace trace;
};

/// The timed loop, keeping only the accepted captions' text joined by spaces.
UntimedResult run_untimed_discourse(const FeatureTrack& features, TranslatorPort& translator,
                                    const DriverConfig& cfg,
                                    const grammar::TimestampGrammar& grammar,
                                    std::optional<double> duration_s = std::nullopt);

/// One untimed request for `clip`, with `prior_context` (suffix-truncated to
/// the budget) as <|prev|> text. Output is returned verbatim. Throws
/// ClipTooLong when the clip is longer than the window.
std::string run_sentence_level(const FeatureTrack& features, const TimeSpan& clip,
                               const std::optional<std::string>& prior_context,
                               TranslatorPort& translator, const DriverConfig& cfg,
                               const grammar::TimestampGrammar& grammar);

struct AlignmentResult {
  /// Captions aligned so far, carrying the input texts.
  CaptionTrack track;
  std::vector<std::string> unconsumed;
  /// Set when alignment stopped on DecoherenceDetected.
  std::optional<std::string> decoherence;
  DecodeTrace trace;
};

/// Aligns known caption texts to the video. Each window lists the captions
/// not yet placed (input breaks, overflow) and a left-edge token at the end
/// of the last placed caption; accepted output lines are matched to the
/// listed captions in order. Decoherence ends the run early with a partial
/// track rather than throwing.
AlignmentResult run_alignment(const FeatureTrack& features, const std::vector<std::string>& caption_texts,
                              TranslatorPort& translator, const DriverConfig& cfg,
                              const grammar::TimestampGrammar& grammar,
                              std::optional<double> duration_s = std::nullopt);

}  // namespace signtrack::driver
