#include "signtrack/driver.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "signtrack/chunker.hpp"
#include "signtrack/error.hpp"
#include "signtrack/text.hpp"

namespace signtrack::driver {

using captions::quantize_millis;
using grammar::TimedLine;

namespace {
constexpr double kEps = 1e-6;
}

void DriverConfig::validate() const {
  if (!(window_s > 0.0) || !(head_margin_s >= 0.0) || !(tail_margin_s >= 0.0) ||
      !(head_margin_s + tail_margin_s < window_s)) {
    throw Error(Errc::InvalidConfig, "driver margins must satisfy head + tail < window");
  }
  if (!(fallback_stride_s > 0.0)) throw Error(Errc::InvalidConfig, "fallback stride must be positive");
  if (!(decoherence_threshold >= 0.0)) throw Error(Errc::InvalidConfig, "bad decoherence threshold");
}

std::size_t DriverConfig::window_cap(double duration_s) const {
  if (max_windows > 0) return max_windows;
  return static_cast<std::size_t>(std::ceil(std::max(0.0, duration_s))) + 16;
}

std::string_view to_string(AdvanceReason r) noexcept {
  switch (r) {
    case AdvanceReason::first_rejected: return "first_rejected";
    case AdvanceReason::last_accepted: return "last_accepted";
    case AdvanceReason::fallback: return "fallback";
    case AdvanceReason::finished: return "finished";
  }
  return "finished";
}

std::string to_jsonl(const DecodeTrace& trace, std::string_view video_id) {
  using nlohmann::json;
  std::string out;
  for (const WindowRecord& w : trace.windows) {
    json accepted = json::array();
    for (const Caption& c : w.accepted) accepted.push_back({{"start_s", c.span.start_s}, {"end_s", c.span.end_s}, {"text", c.text}});
    json rejected = json::array();
    for (const TimedLine& l : w.rejected) rejected.push_back({{"start_s", l.span.start_s}, {"end_s", l.span.end_s}, {"text", l.text}});
    json diags = json::array();
    for (const auto& d : w.diagnostics) {
      diags.push_back({{"line", d.line}, {"kind", std::string(grammar::to_string(d.kind))}, {"content", d.content}});
    }
    const json j = {
        {"video_id", std::string(video_id)},
        {"window", {w.window.start_s, w.window.end_s}},
        {"input_text", w.input_text},
        {"output_text", w.output_text},
        {"accepted", std::move(accepted)},
        {"rejected", std::move(rejected)},
        {"diagnostics", std::move(diags)},
        {"advance", std::string(to_string(w.reason))},
    };
    out += j.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

namespace {

// Frames covering `span`, clamped to what the track actually has.
FeatureSlice window_slice(const FeatureTrack& features, const TimeSpan& span) {
  const double end = std::min(span.end_s, features.duration_s());
  return chunker::slice_features(features, {std::min(span.start_s, end), end});
}

std::string call_translator(TranslatorPort& translator, const FeatureSlice& slice,
                            const TimeSpan& window, const std::string& input) {
  const std::string where = "window [" + std::to_string(window.start_s) + ", " + std::to_string(window.end_s) + "]: ";
  try {
    return translator.translate(slice, input);
  } catch (const Error& e) {
    throw Error(Errc::TranslatorFailure, where + (e.code() == Errc::TranslatorFailure ? e.message() : e.what()));
  } catch (const std::exception& e) {
    throw Error(Errc::TranslatorFailure, where + e.what());
  }
}

struct Position {
  TimeSpan window;
  bool first = false;
  bool last = false;
};

struct StepResult {
  WindowRecord record;
  std::optional<double> last_accepted_end;
  std::optional<double> first_rejected_start;
  bool done = false;
};

// The window loop shared by translation and alignment; `step` decodes one
// window and reports what it accepted.
template <typename Step>
DecodeTrace drive(double duration, const DriverConfig& cfg, Step&& step) {
  DecodeTrace trace;
  const std::size_t cap = cfg.window_cap(duration);
  double ws = 0.0;
  for (;;) {
    Position pos;
    pos.window = {ws, std::min(duration, quantize_millis(ws + cfg.window_s))};
    pos.first = ws <= kEps;
    pos.last = pos.window.end_s >= duration - kEps;
    StepResult r = step(pos);

    double next = ws + cfg.fallback_stride_s;
    AdvanceReason reason = AdvanceReason::fallback;
    if (r.done || pos.last) {
      reason = AdvanceReason::finished;
    } else if (r.first_rejected_start &&
               *r.first_rejected_start < ws + cfg.window_s - cfg.tail_margin_s - kEps &&
               quantize_millis(*r.first_rejected_start - cfg.head_margin_s) > ws + kEps) {
      next = quantize_millis(*r.first_rejected_start - cfg.head_margin_s);
      reason = AdvanceReason::first_rejected;
    } else if (r.last_accepted_end &&
               quantize_millis(*r.last_accepted_end - cfg.head_margin_s) > ws + kEps) {
      next = quantize_millis(*r.last_accepted_end - cfg.head_margin_s);
      reason = AdvanceReason::last_accepted;
    }
    r.record.reason = reason;
    trace.windows.push_back(std::move(r.record));
    if (reason == AdvanceReason::finished) break;
    if (trace.windows.size() >= cap) {
      throw Error(Errc::LivelockGuardTripped, "no end of video after " + std::to_string(cap) +
                                                  " windows (last window at " + std::to_string(ws) + " s)");
    }
    ws = quantize_millis(next);
  }
  return trace;
}

struct Acceptance {
  std::vector<TimedLine> accepted;
  std::optional<double> first_rejected_start;
};

// Keeps the leading run of new lines inside the acceptance region. Lines that
// start before `last_end` were already accepted in an earlier window.
Acceptance accept_lines(grammar::ParsedTrack& parsed, const Position& pos, const DriverConfig& cfg,
                        std::optional<double> last_start, double last_end, WindowRecord& record) {
  const double lo = pos.first ? pos.window.start_s : pos.window.start_s + cfg.head_margin_s;
  const double hi = pos.last ? pos.window.end_s
                             : pos.window.start_s + cfg.window_s - cfg.tail_margin_s;
  Acceptance a;
  bool stopped = false;
  for (TimedLine& l : parsed.lines) {
    const bool fresh = l.span.start_s >= last_end - kEps && (!last_start || l.span.start_s > *last_start + kEps);
    if (!fresh) {
      record.rejected.push_back(std::move(l));
      continue;
    }
    const bool inside = !l.continues && l.span.start_s >= lo - kEps && l.span.end_s <= hi + kEps;
    if (!stopped && inside) {
      a.accepted.push_back(std::move(l));
      continue;
    }
    if (!stopped) a.first_rejected_start = l.span.start_s;
    stopped = true;
    record.rejected.push_back(std::move(l));
  }
  record.diagnostics = std::move(parsed.diagnostics);
  return a;
}

}  // namespace

TimedResult run_timed_translation(const FeatureTrack& features, TranslatorPort& translator,
                                  const DriverConfig& cfg, const grammar::TimestampGrammar& grammar,
                                  std::optional<double> duration_s) {
  cfg.validate();
  if (cfg.window_s > grammar.max_s + kEps) {
    throw Error(Errc::InvalidConfig, "window longer than the timestamp grammar allows");
  }
  const double duration = duration_s.value_or(features.duration_s());
  if (!(duration > 0.0)) throw Error(Errc::NonPositiveDuration, "video duration must be positive");

  std::vector<Caption> accepted;
  std::vector<std::string> accepted_text;
  auto step = [&](const Position& pos) {
    StepResult r;
    WindowRecord& rec = r.record;
    rec.window = pos.window;
    const std::string prior = grammar::truncate_context(accepted_text, cfg.context_budget);
    rec.input_text = grammar::translation_input(grammar::Timing::timed, cfg.avg_duration_s, prior, "", grammar);
    rec.output_text = call_translator(translator, window_slice(features, pos.window), pos.window, rec.input_text);
    auto parsed = grammar::parse_timed_track(rec.output_text, pos.window.start_s, grammar, pos.window.duration());

    std::optional<double> last_start;
    double last_end = 0.0;
    if (!accepted.empty()) {
      last_start = accepted.back().span.start_s;
      last_end = accepted.back().span.end_s;
    }
    auto a = accept_lines(parsed, pos, cfg, last_start, last_end, rec);
    for (TimedLine& l : a.accepted) {
      Caption c{l.span, std::move(l.text), accepted.size()};
      accepted_text.push_back(c.text);
      rec.accepted.push_back(c);
      accepted.push_back(std::move(c));
    }
    if (!rec.accepted.empty()) r.last_accepted_end = rec.accepted.back().span.end_s;
    r.first_rejected_start = a.first_rejected_start;
    return r;
  };
  DecodeTrace trace = drive(duration, cfg, step);
  return {CaptionTrack(std::move(accepted), duration), std::move(trace)};
}

UntimedResult run_untimed_discourse(const FeatureTrack& features, TranslatorPort& translator,
                                    const DriverConfig& cfg,
                                    const grammar::TimestampGrammar& grammar,
                                    std::optional<double> duration_s) {
  const double duration = duration_s.value_or(features.duration_s());
  if (duration <= 0.0) return {};
  auto timed = run_timed_translation(features, translator, cfg, grammar, duration);
  return {text::join(timed.track.texts(), " "), std::move(timed.trace)};
}

std::string run_sentence_level(const FeatureTrack& features, const TimeSpan& clip,
                               const std::optional<std::string>& prior_context,
                               TranslatorPort& translator, const DriverConfig& cfg,
                               const grammar::TimestampGrammar& grammar) {
  if (clip.duration() > cfg.window_s + kEps) {
    throw Error(Errc::ClipTooLong, "clip of " + std::to_string(clip.duration()) + " s exceeds the " +
                                       std::to_string(cfg.window_s) + " s window");
  }
  const std::string prior =
      prior_context ? grammar::truncate_context(std::string_view(*prior_context), cfg.context_budget) : "";
  const std::string input = grammar::translation_input(grammar::Timing::untimed, std::nullopt, prior, "", grammar);
  return call_translator(translator, window_slice(features, clip), clip, input);
}

AlignmentResult run_alignment(const FeatureTrack& features, const std::vector<std::string>& caption_texts,
                              TranslatorPort& translator, const DriverConfig& cfg,
                              const grammar::TimestampGrammar& grammar,
                              std::optional<double> duration_s) {
  cfg.validate();
  const double duration = duration_s.value_or(features.duration_s());
  AlignmentResult result;
  if (caption_texts.empty()) {
    result.track = CaptionTrack({}, std::max(0.0, duration));
    return result;
  }
  if (!(duration > 0.0)) throw Error(Errc::NonPositiveDuration, "video duration must be positive");

  std::vector<std::string> listed_texts;
  listed_texts.reserve(caption_texts.size());
  for (const auto& t : caption_texts) listed_texts.push_back(text::normalize_whitespace(t));

  std::vector<Caption> placed;
  std::size_t next_caption = 0;
  auto step = [&](const Position& pos) {
    StepResult r;
    WindowRecord& rec = r.record;
    rec.window = pos.window;
    const double last_end = placed.empty() ? 0.0 : placed.back().span.end_s;
    const double left = std::clamp(last_end - pos.window.start_s, 0.0, pos.window.duration());
    const auto remaining = std::span<const std::string>(listed_texts).subspan(next_caption);
    const auto listed = grammar::truncate_leading(remaining, cfg.context_budget);
    rec.input_text = grammar::alignment_input(grammar::SepMode::input_specifies_breaks,
                                              grammar::SpanMode::overflow, std::nullopt, left, listed, grammar);
    rec.output_text = call_translator(translator, window_slice(features, pos.window), pos.window, rec.input_text);
    auto parsed = grammar::parse_timed_track(rec.output_text, pos.window.start_s, grammar, pos.window.duration());

    std::optional<double> last_start;
    if (!placed.empty()) last_start = placed.back().span.start_s;
    auto a = accept_lines(parsed, pos, cfg, last_start, last_end, rec);
    if (a.accepted.size() > remaining.size()) {
      for (std::size_t i = remaining.size(); i < a.accepted.size(); ++i) rec.rejected.push_back(a.accepted[i]);
      a.accepted.resize(remaining.size());
    }

    std::size_t distance = 0;
    std::size_t length = 0;
    for (std::size_t i = 0; i < a.accepted.size(); ++i) {
      const auto got = text::decode_utf8(text::normalize_whitespace(a.accepted[i].text));
      const auto want = text::decode_utf8(remaining[i]);
      distance += text::edit_distance(got, want);
      length += std::max(got.size(), want.size());
    }
    const double divergence = length == 0 ? 0.0 : static_cast<double>(distance) / static_cast<double>(length);
    if (divergence > cfg.decoherence_threshold) {
      result.decoherence = "window [" + std::to_string(pos.window.start_s) + ", " +
                           std::to_string(pos.window.end_s) + "]: output diverges from the input captions " +
                           "(normalized edit distance " + std::to_string(divergence) + ")";
      for (auto& l : a.accepted) rec.rejected.push_back(std::move(l));
      r.done = true;
      return r;
    }
    for (TimedLine& l : a.accepted) {
      Caption c{l.span, caption_texts[next_caption++], placed.size()};
      rec.accepted.push_back(c);
      placed.push_back(std::move(c));
    }
    if (!rec.accepted.empty()) r.last_accepted_end = rec.accepted.back().span.end_s;
    r.first_rejected_start = a.first_rejected_start;
    r.done = next_caption == caption_texts.size();
    return r;
  };
  result.trace = drive(duration, cfg, step);
  result.unconsumed.assign(caption_texts.begin() + static_cast<std::ptrdiff_t>(next_caption), caption_texts.end());
  result.track = CaptionTrack(std::move(placed), duration);
  return result;
}

}  // namespace signtrack::driver
