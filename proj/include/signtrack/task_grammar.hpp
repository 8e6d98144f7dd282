#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signtrack/captions.hpp"
#include "signtrack/chunker.hpp"
#include "signtrack/keyed_rng.hpp"

// Control-token grammar shared by training-example rendering, the inference
// driver and the mock translators. Control tokens are plain text:
//
//   input   <|translate|><|timed|>[<|avgdur:5.2|>]
//           <|prev|> earlier caption text ...
//           <|next|> later caption text ...
//
//           <|align|><|breaks:input|><|overflow|>[<|avgdur:5.2|>]<|left:3.0|>
//           caption one
//           caption two
//
//   target  <|0.0|><|4.5|> caption one
//           <|4.5|><|34.0|><|cont|> caption that runs past the window
//
// Timestamps are window-relative seconds on a fixed quantum (0.1 s).
namespace signtrack::grammar {

using captions::Caption;
using captions::TimeSpan;

namespace tokens {
inline constexpr std::string_view kAlign = "<|align|>";
inline constexpr std::string_view kTranslate = "<|translate|>";
inline constexpr std::string_view kTimed = "<|timed|>";
inline constexpr std::string_view kUntimed = "<|untimed|>";
inline constexpr std::string_view kBreaksInput = "<|breaks:input|>";
inline constexpr std::string_view kBreaksModel = "<|breaks:model|>";
inline constexpr std::string_view kOverflow = "<|overflow|>";
inline constexpr std::string_view kSubset = "<|subset|>";
inline constexpr std::string_view kPrev = "<|prev|>";
inline constexpr std::string_view kNext = "<|next|>";
inline constexpr std::string_view kCont = "<|cont|>";
inline constexpr std::string_view kAvgDurPrefix = "avgdur:";
inline constexpr std::string_view kLeftPrefix = "left:";
}  // namespace tokens

// ---------------------------------------------------------------------------
// Task mixture

enum class Branch { alignment, translation };
enum class SepMode { input_specifies_breaks, model_predicts_breaks };
enum class SpanMode { overflow, subset };
enum class Timing { untimed, timed };
enum class ContextMode { none, prev, prev_and_next };

struct TaskDescriptor {
  Branch branch = Branch::translation;
  // alignment
  SepMode sep = SepMode::input_specifies_breaks;
  SpanMode span = SpanMode::overflow;
  // translation
  Timing timing = Timing::timed;
  ContextMode context = ContextMode::none;
  /// Alignment with model-predicted breaks, or timed translation.
  bool duration_conditioning = false;
  /// Uniform [0,1) draw fixing the subset prefix length once |curr| is known.
  double subset_draw = 0.0;

  friend bool operator==(const TaskDescriptor&, const TaskDescriptor&) = default;
};

/// Choice-point probabilities of the multitask mixture.
struct MixtureWeights {
  double alignment = 0.04;
  double input_breaks = 0.5;        // alignment: input specifies breaks
  double align_duration = 0.5;      // alignment, model predicts breaks
  double overflow = 0.8;            // alignment: overflow vs subset
  double untimed = 0.2;             // translation
  double timed_duration = 0.5;      // timed translation
  double context_none = 0.2;
  double context_prev = 0.64;
  double context_prev_next = 0.16;

  /// Throws InvalidConfig if a probability is outside [0,1] or the context
  /// choices do not sum to 1.
  void validate() const;
};

TaskDescriptor sample_task(KeyedRng& rng, const MixtureWeights& weights = {});

/// Short stable label, e.g. "translate/timed/dur/prev" or "align/input/overflow".
std::string describe(const TaskDescriptor& desc);

std::string_view to_string(ContextMode c) noexcept;

// ---------------------------------------------------------------------------
// Timestamps

struct TimestampGrammar {
  double quantum_s = 0.1;
  double max_s = 34.0;

  /// Decimal places needed to print a multiple of the quantum.
  int decimals() const;
  std::int64_t ticks(double relative_s) const;
  /// "12.3" for 12.3 s at the default quantum.
  std::string format(double relative_s) const;
  std::string timestamp_token(double relative_s) const;  // "<|12.3|>"
};

struct TimedLine {
  TimeSpan span;  // absolute seconds
  std::string text;
  bool continues = false;  // the caption runs past the window; end is clamped
  std::size_t line = 0;    // 1-based source line when parsed

  friend bool operator==(const TimedLine&, const TimedLine&) = default;
};

/// One line per caption, "<|start|><|end|> text", window-relative to
/// `origin_s`. Throws CaptionOutsideWindow for a caption outside
/// [origin, origin + window] (window defaults to grammar.max_s) and
/// InvalidCaption for text containing a newline.
std::string render_timed_track(std::span<const Caption> captions, double origin_s,
                               const TimestampGrammar& grammar,
                               std::optional<double> window_s = std::nullopt);
std::string render_timed_lines(std::span<const TimedLine> lines, double origin_s,
                               const TimestampGrammar& grammar,
                               std::optional<double> window_s = std::nullopt);

enum class LineError { MalformedTimestamp, NonMonotonic, OutOfWindow, EmptyText };
std::string_view to_string(LineError e) noexcept;

struct LineDiagnostic {
  std::size_t line = 0;
  LineError kind = LineError::MalformedTimestamp;
  std::string content;
};

struct ParsedTrack {
  std::vector<TimedLine> lines;
  std::vector<LineDiagnostic> diagnostics;

  std::vector<Caption> captions() const;
};

/// Parses arbitrary model output. Well-formed lines become absolute-time
/// TimedLines; every other non-blank line is reported and skipped. Lines that
/// start before the previous accepted line ends, or end before they start,
/// are NonMonotonic.
ParsedTrack parse_timed_track(std::string_view text, double origin_s,
                              const TimestampGrammar& grammar,
                              std::optional<double> window_s = std::nullopt);

// ---------------------------------------------------------------------------
// Text context budget

/// Splits text into budget units; returned views point into the argument.
using UnitSplitter = std::function<std::vector<std::string_view>(std::string_view)>;

/// Default unit: a whitespace-delimited word.
UnitSplitter whitespace_units();

/// Keeps the most recent text within `budget` units. Whole captions are kept
/// from the end while they fit; if not even the last caption fits it is cut
/// at a unit boundary. Captions are joined with single spaces.
std::string truncate_context(std::span<const std::string> captions_text, std::size_t budget,
                             const UnitSplitter& units = whitespace_units());
std::string truncate_context(std::string_view text, std::size_t budget,
                             const UnitSplitter& units = whitespace_units());

/// Mirror image of truncate_context for lookahead text: keeps the earliest
/// whole captions (or a unit-boundary prefix of the first one).
std::vector<std::string> truncate_leading(std::span<const std::string> captions_text,
                                          std::size_t budget,
                                          const UnitSplitter& units = whitespace_units());

// ---------------------------------------------------------------------------
// Model inputs

std::string translation_input(Timing timing, std::optional<double> avg_duration_s,
                              std::string_view prev_text, std::string_view next_text,
                              const TimestampGrammar& grammar);

std::string alignment_input(SepMode sep, SpanMode span, std::optional<double> avg_duration_s,
                            double left_edge_rel_s, std::span<const std::string> captions_text,
                            const TimestampGrammar& grammar);

/// Decoded form of an input produced by the two builders above.
struct ParsedInput {
  Branch branch = Branch::translation;
  Timing timing = Timing::timed;
  SepMode sep = SepMode::input_specifies_breaks;
  SpanMode span = SpanMode::overflow;
  std::optional<double> avg_duration_s;
  std::optional<double> left_edge_rel_s;
  std::string prev_text;
  std::string next_text;
  std::vector<std::string> captions_text;  // alignment body (one entry per line)
};

/// Throws MalformedRecord if the header is not a recognized task header.
ParsedInput parse_input(std::string_view input);

// ---------------------------------------------------------------------------
// Training examples

struct RenderOptions {
  std::size_t context_budget = 256;
  UnitSplitter units = whitespace_units();
};

struct ModelExample {
  std::string input_text;
  std::string target_text;
  /// Feature file of the chunk and the clip's frame range within it.
  std::string feature_ref;
  std::size_t first_frame = 0;
  std::size_t end_frame = 0;
  chunker::ClipSpec clip;
  TaskDescriptor descriptor;
};

/// Builds the (input, target) pair for one sampled clip. Throws EmptyClip
/// when the clip covers no feature frames.
ModelExample render_example(const chunker::ChunkRecord& chunk, const chunker::ClipSpec& clip,
                            const TaskDescriptor& desc, const TimestampGrammar& grammar,
                            const RenderOptions& options = {});

std::string to_json_line(const ModelExample& example);

}  // namespace signtrack::grammar
