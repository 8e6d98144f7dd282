#include "signtrack/task_grammar.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>

#include <json.hpp>

#include "signtrack/error.hpp"
#include "signtrack/text.hpp"

namespace signtrack::grammar {

using captions::quantize_millis;

// ---------------------------------------------------------------------------
// Task mixture

void MixtureWeights::validate() const {
  for (double p : {alignment, input_breaks, align_duration, overflow, untimed, timed_duration,
                   context_none, context_prev, context_prev_next}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::InvalidConfig, "mixture weight outside [0, 1]");
  }
  if (std::abs(context_none + context_prev + context_prev_next - 1.0) > 1e-9) {
    throw Error(Errc::InvalidConfig, "context weights must sum to 1");
  }
}

TaskDescriptor sample_task(KeyedRng& rng, const MixtureWeights& w) {
  TaskDescriptor d;
  if (rng.uniform() < w.alignment) {
    d.branch = Branch::alignment;
    d.sep = rng.uniform() < w.input_breaks ? SepMode::input_specifies_breaks
                                           : SepMode::model_predicts_breaks;
    if (d.sep == SepMode::model_predicts_breaks) d.duration_conditioning = rng.uniform() < w.align_duration;
    d.span = rng.uniform() < w.overflow ? SpanMode::overflow : SpanMode::subset;
    if (d.span == SpanMode::subset) d.subset_draw = rng.uniform();
  } else {
    d.branch = Branch::translation;
    d.timing = rng.uniform() < w.untimed ? Timing::untimed : Timing::timed;
    if (d.timing == Timing::timed) d.duration_conditioning = rng.uniform() < w.timed_duration;
    const double c = rng.uniform();
    d.context = c < w.context_none                    ? ContextMode::none
                : c < w.context_none + w.context_prev ? ContextMode::prev
                                                      : ContextMode::prev_and_next;
  }
  return d;
}

std::string_view to_string(ContextMode c) noexcept {
  switch (c) {
    case ContextMode::none: return "none";
    case ContextMode::prev: return "prev";
    case ContextMode::prev_and_next: return "prev+next";
  }
  return "none";
}

std::string describe(const TaskDescriptor& d) {
  std::string s;
  if (d.branch == Branch::alignment) {
    s = "align/";
    s += d.sep == SepMode::input_specifies_breaks ? "input" : "model";
    if (d.duration_conditioning) s += "/dur";
    s += d.span == SpanMode::overflow ? "/overflow" : "/subset";
  } else {
    s = "translate/";
    s += d.timing == Timing::timed ? "timed" : "untimed";
    if (d.duration_conditioning) s += "/dur";
    s += "/";
    s += to_string(d.context);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Timestamps

int TimestampGrammar::decimals() const {
  double scaled = quantum_s;
  for (int d = 0; d <= 6; ++d) {
    if (std::abs(scaled - std::round(scaled)) < 1e-9) return d;
    scaled *= 10.0;
  }
  return 6;
}

std::int64_t TimestampGrammar::ticks(double relative_s) const {
  return std::llround(relative_s / quantum_s);
}

std::string TimestampGrammar::format(double relative_s) const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals(),
                static_cast<double>(ticks(relative_s)) * quantum_s);
  return buf;
}

std::string TimestampGrammar::timestamp_token(double relative_s) const {
  return "<|" + format(relative_s) + "|>";
}

namespace {

constexpr double kTimeEps = 1e-6;

std::int64_t max_ticks(const TimestampGrammar& g, double window_s) {
  return static_cast<std::int64_t>(std::floor(window_s / g.quantum_s + 1e-9));
}

std::string render_line(const TimestampGrammar& g, std::int64_t start, std::int64_t end,
                        bool continues, std::string_view text) {
  std::string line = g.timestamp_token(static_cast<double>(start) * g.quantum_s);
  line += g.timestamp_token(static_cast<double>(end) * g.quantum_s);
  if (continues) line += tokens::kCont;
  line += ' ';
  line += text;
  return line;
}

}  // namespace

std::string render_timed_lines(std::span<const TimedLine> lines, double origin_s,
                               const TimestampGrammar& grammar, std::optional<double> window_s) {
  const double window = std::min(window_s.value_or(grammar.max_s), grammar.max_s);
  const std::int64_t limit = max_ticks(grammar, window);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const TimedLine& l = lines[i];
    const double rel_start = l.span.start_s - origin_s;
    const double rel_end = l.span.end_s - origin_s;
    if (rel_start < -kTimeEps || rel_end > window + kTimeEps || rel_end < rel_start) {
      throw Error(Errc::CaptionOutsideWindow,
                  "caption [" + std::to_string(l.span.start_s) + ", " + std::to_string(l.span.end_s) +
                      "] outside window starting at " + std::to_string(origin_s));
    }
    if (l.text.find('\n') != std::string::npos || l.text.find('\r') != std::string::npos) {
      throw Error(Errc::InvalidCaption, "timed caption text must be a single line");
    }
    const std::int64_t start = std::clamp<std::int64_t>(grammar.ticks(rel_start), 0, limit);
    const std::int64_t end = std::clamp<std::int64_t>(grammar.ticks(rel_end), start, limit);
    if (i > 0) out += '\n';
    out += render_line(grammar, start, end, l.continues, l.text);
  }
  return out;
}

std::string render_timed_track(std::span<const Caption> captions, double origin_s,
                               const TimestampGrammar& grammar, std::optional<double> window_s) {
  std::vector<TimedLine> lines;
  lines.reserve(captions.size());
  for (const Caption& c : captions) lines.push_back({c.span, c.text, false, 0});
  return render_timed_lines(lines, origin_s, grammar, window_s);
}

std::string_view to_string(LineError e) noexcept {
  switch (e) {
    case LineError::MalformedTimestamp: return "MalformedTimestamp";
    case LineError::NonMonotonic: return "NonMonotonic";
    case LineError::OutOfWindow: return "OutOfWindow";
    case LineError::EmptyText: return "EmptyText";
  }
  return "MalformedTimestamp";
}

std::vector<Caption> ParsedTrack::captions() const {
  std::vector<Caption> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) out.push_back({lines[i].span, lines[i].text, i});
  return out;
}

namespace {

// Reads "<|content|>" at the front of `s`; advances `s` past it.
std::optional<std::string_view> take_token(std::string_view& s) {
  if (!s.starts_with("<|")) return std::nullopt;
  const auto close = s.find("|>", 2);
  if (close == std::string_view::npos) return std::nullopt;
  const auto content = s.substr(2, close - 2);
  s.remove_prefix(close + 2);
  return content;
}

// A non-negative decimal that is a whole number of quanta.
std::optional<std::int64_t> parse_ticks(std::string_view s, const TimestampGrammar& g) {
  if (s.empty()) return std::nullopt;
  const auto dot = s.find('.');
  const auto int_part = s.substr(0, dot);
  const auto frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  auto digits = [](std::string_view d) {
    return std::all_of(d.begin(), d.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (int_part.empty() || !digits(int_part) || !digits(frac_part) ||
      (dot != std::string_view::npos && frac_part.empty())) {
    return std::nullopt;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  const double q = value / g.quantum_s;
  if (std::abs(q - std::round(q)) > 1e-6) return std::nullopt;
  return std::llround(q);
}

std::optional<double> parse_number(std::string_view s) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

ParsedTrack parse_timed_track(std::string_view text, double origin_s,
                              const TimestampGrammar& grammar, std::optional<double> window_s) {
  const double window = std::min(window_s.value_or(grammar.max_s), grammar.max_s);
  const std::int64_t limit = max_ticks(grammar, window);
  ParsedTrack out;
  std::int64_t prev_end = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (text::is_blank(line)) continue;

    auto reject = [&](LineError kind) {
      out.diagnostics.push_back({line_no, kind, std::string(line)});
    };
    std::string_view rest = line;
    const auto t1 = take_token(rest);
    const auto start = t1 ? parse_ticks(*t1, grammar) : std::nullopt;
    const auto t2 = start ? take_token(rest) : std::nullopt;
    const auto end = t2 ? parse_ticks(*t2, grammar) : std::nullopt;
    if (!start || !end) {
      reject(LineError::MalformedTimestamp);
      continue;
    }
    bool continues = false;
    if (rest.starts_with(tokens::kCont)) {
      continues = true;
      rest.remove_prefix(tokens::kCont.size());
    }
    if (!rest.empty() && rest.front() != ' ') {
      reject(LineError::MalformedTimestamp);
      continue;
    }
    if (!rest.empty()) rest.remove_prefix(1);
    if (text::is_blank(rest)) {
      reject(LineError::EmptyText);
      continue;
    }
    if (*start > limit || *end > limit) {
      reject(LineError::OutOfWindow);
      continue;
    }
    if (*end < *start || *start < prev_end) {
      reject(LineError::NonMonotonic);
      continue;
    }
    prev_end = *end;
    const TimeSpan span{quantize_millis(origin_s + static_cast<double>(*start) * grammar.quantum_s),
                        quantize_millis(origin_s + static_cast<double>(*end) * grammar.quantum_s)};
    out.lines.push_back({span, std::string(rest), continues, line_no});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Context budget

UnitSplitter whitespace_units() {
  return [](std::string_view s) { return text::split_whitespace(s); };
}

std::string truncate_context(std::string_view text, std::size_t budget, const UnitSplitter& units) {
  if (budget == 0) return {};
  const auto pieces = units(text);
  if (pieces.size() <= budget) return std::string(text);
  const auto* from = pieces[pieces.size() - budget].data();
  return std::string(from, static_cast<std::size_t>(text.data() + text.size() - from));
}

std::string truncate_context(std::span<const std::string> captions_text, std::size_t budget,
                             const UnitSplitter& units) {
  if (budget == 0 || captions_text.empty()) return {};
  std::deque<std::string_view> kept;
  std::size_t used = 0;
  for (auto it = captions_text.rbegin(); it != captions_text.rend(); ++it) {
    const std::size_t n = units(*it).size();
    if (used + n > budget) break;
    used += n;
    if (n > 0) kept.push_front(*it);
  }
  if (kept.empty()) return truncate_context(std::string_view(captions_text.back()), budget, units);
  std::string out;
  for (const auto& t : kept) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::vector<std::string> truncate_leading(std::span<const std::string> captions_text,
                                          std::size_t budget, const UnitSplitter& units) {
  std::vector<std::string> kept;
  if (budget == 0) return kept;
  std::size_t used = 0;
  for (const auto& t : captions_text) {
    const auto pieces = units(t);
    if (used + pieces.size() > budget) {
      if (kept.empty() && !pieces.empty()) {
        const auto last = pieces[budget - 1];
        kept.emplace_back(t.data(), static_cast<std::size_t>(last.data() + last.size() - t.data()));
      }
      break;
    }
    used += pieces.size();
    kept.push_back(t);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Model inputs

namespace {

std::string valued_token(std::string_view prefix, double value, const TimestampGrammar& g) {
  std::string t = "<|";
  t += prefix;
  t += g.format(value);
  t += "|>";
  return t;
}

}  // namespace

std::string translation_input(Timing timing, std::optional<double> avg_duration_s,
                              std::string_view prev_text, std::string_view next_text,
                              const TimestampGrammar& grammar) {
  std::string out(tokens::kTranslate);
  out += timing == Timing::timed ? tokens::kTimed : tokens::kUntimed;
  if (avg_duration_s) out += valued_token(tokens::kAvgDurPrefix, *avg_duration_s, grammar);
  if (!prev_text.empty()) {
    out += '\n';
    out += tokens::kPrev;
    out += ' ';
    out += prev_text;
  }
  if (!next_text.empty()) {
    out += '\n';
    out += tokens::kNext;
    out += ' ';
    out += next_text;
  }
  return out;
}

std::string alignment_input(SepMode sep, SpanMode span, std::optional<double> avg_duration_s,
                            double left_edge_rel_s, std::span<const std::string> captions_text,
                            const TimestampGrammar& grammar) {
  std::string out(tokens::kAlign);
  out += sep == SepMode::input_specifies_breaks ? tokens::kBreaksInput : tokens::kBreaksModel;
  out += span == SpanMode::overflow ? tokens::kOverflow : tokens::kSubset;
  if (avg_duration_s) out += valued_token(tokens::kAvgDurPrefix, *avg_duration_s, grammar);
  out += valued_token(tokens::kLeftPrefix, left_edge_rel_s, grammar);
  if (!captions_text.empty()) {
    out += '\n';
    const char* joiner = sep == SepMode::input_specifies_breaks ? "\n" : " ";
    for (std::size_t i = 0; i < captions_text.size(); ++i) {
      if (i > 0) out += joiner;
      out += captions_text[i];
    }
  }
  return out;
}

ParsedInput parse_input(std::string_view input) {
  const auto nl = input.find('\n');
  std::string_view header = input.substr(0, nl);
  std::string_view body = nl == std::string_view::npos ? std::string_view{} : input.substr(nl + 1);

  ParsedInput p;
  bool have_branch = false;
  while (!header.empty()) {
    const auto tok = take_token(header);
    if (!tok) throw Error(Errc::MalformedRecord, "bad task header");
    const std::string full = "<|" + std::string(*tok) + "|>";
    if (full == tokens::kAlign) {
      p.branch = Branch::alignment;
      have_branch = true;
    } else if (full == tokens::kTranslate) {
      p.branch = Branch::translation;
      have_branch = true;
    } else if (full == tokens::kTimed) {
      p.timing = Timing::timed;
    } else if (full == tokens::kUntimed) {
      p.timing = Timing::untimed;
    } else if (full == tokens::kBreaksInput) {
      p.sep = SepMode::input_specifies_breaks;
    } else if (full == tokens::kBreaksModel) {
      p.sep = SepMode::model_predicts_breaks;
    } else if (full == tokens::kOverflow) {
      p.span = SpanMode::overflow;
    } else if (full == tokens::kSubset) {
      p.span = SpanMode::subset;
    } else if (tok->starts_with(tokens::kAvgDurPrefix)) {
      p.avg_duration_s = parse_number(tok->substr(tokens::kAvgDurPrefix.size()));
    } else if (tok->starts_with(tokens::kLeftPrefix)) {
      p.left_edge_rel_s = parse_number(tok->substr(tokens::kLeftPrefix.size()));
    } else {
      throw Error(Errc::MalformedRecord, "unknown control token " + full);
    }
  }
  if (!have_branch) throw Error(Errc::MalformedRecord, "task header lacks a task tag");

  while (!body.empty()) {
    const auto next = body.find('\n');
    std::string_view line = body.substr(0, next);
    body.remove_prefix(next == std::string_view::npos ? body.size() : next + 1);
    if (p.branch == Branch::translation) {
      auto section = [&](std::string_view tag, std::string& dst) {
        if (!line.starts_with(tag)) return false;
        auto v = line.substr(tag.size());
        if (v.starts_with(' ')) v.remove_prefix(1);
        dst = std::string(v);
        return true;
      };
      if (!section(tokens::kPrev, p.prev_text) && !section(tokens::kNext, p.next_text)) {
        throw Error(Errc::MalformedRecord, "unexpected translation input line");
      }
    } else {
      p.captions_text.emplace_back(line);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Training examples

namespace {

std::vector<std::string> texts_of(std::span<const Caption> caps) {
  std::vector<std::string> out;
  out.reserve(caps.size());
  for (const auto& c : caps) out.push_back(c.text);
  return out;
}

double round_to_quantum(double v, const TimestampGrammar& g) {
  return static_cast<double>(g.ticks(v)) * g.quantum_s;
}

}  // namespace

ModelExample render_example(const chunker::ChunkRecord& chunk, const chunker::ClipSpec& clip,
                            const TaskDescriptor& desc, const TimestampGrammar& grammar,
                            const RenderOptions& options) {
  const TimeSpan abs = clip.absolute(chunk);
  const double window = clip.duration_s;

  ModelExample ex;
  ex.clip = clip;
  ex.descriptor = desc;
  ex.feature_ref = chunk.feature_slice_ref;
  {
    constexpr double kEps = 1e-6;
    const auto first = static_cast<std::size_t>(std::floor(abs.start_s * chunk.fps + kEps));
    const auto end = static_cast<std::size_t>(std::floor(abs.end_s * chunk.fps + kEps));
    if (!(window > 0.0) || end <= first) {
      throw Error(Errc::EmptyClip, chunk.video_id + " chunk " + std::to_string(chunk.chunk_index) +
                                       ": clip covers no feature frames");
    }
    if (!chunk.feature_slice_ref.empty()) {
      const std::size_t lo = std::max(first, chunk.first_frame);
      const std::size_t hi = std::min(end, chunk.end_frame);
      if (hi <= lo) throw Error(Errc::EmptyClip, "clip lies outside the chunk's feature slice");
      ex.first_frame = lo - chunk.first_frame;
      ex.end_frame = hi - chunk.first_frame;
    } else {
      ex.first_frame = first;
      ex.end_frame = end;
    }
  }

  std::vector<Caption> caps = chunk.context_captions;
  for (Caption& c : caps) c.text = text::normalize_whitespace(c.text);
  const auto wc = captions::classify_window_captions(caps, abs, grammar.max_s);

  std::optional<double> avg;
  if (desc.duration_conditioning) avg = round_to_quantum(chunk.mean_caption_s, grammar);

  if (desc.branch == Branch::translation) {
    std::string prev;
    std::string next;
    if (desc.context != ContextMode::none) {
      prev = truncate_context(texts_of(wc.prev), options.context_budget, options.units);
    }
    if (desc.context == ContextMode::prev_and_next) {
      next = text::join(truncate_leading(texts_of(wc.next), options.context_budget, options.units), " ");
    }
    ex.input_text = translation_input(desc.timing, avg, prev, next, grammar);
    ex.target_text = desc.timing == Timing::untimed
                         ? text::join(texts_of(wc.curr), " ")
                         : render_timed_track(wc.curr, abs.start_s, grammar, window);
    return ex;
  }

  const double left = wc.left_edge_end_s
                          ? std::clamp(*wc.left_edge_end_s - abs.start_s, 0.0, window)
                          : 0.0;
  std::vector<std::string> listed;
  std::vector<TimedLine> target;
  if (desc.span == SpanMode::overflow) {
    std::vector<std::string> from_left;
    for (const Caption& c : caps) {
      if (c.span.start_s >= abs.start_s) from_left.push_back(c.text);
    }
    listed = truncate_leading(from_left, options.context_budget, options.units);
    for (const Caption& c : caps) {
      if (target.size() >= listed.size()) break;
      if (abs.contains(c.span)) {
        target.push_back({c.span, c.text, false, 0});
      } else if (c.span.start_s >= abs.start_s && c.span.start_s < abs.end_s) {
        target.push_back({{c.span.start_s, abs.end_s}, c.text, true, 0});
      }
    }
  } else {
    const std::size_t n = wc.curr.size();
    const std::size_t k =
        n == 0 ? 0 : std::min(n, 1 + static_cast<std::size_t>(desc.subset_draw * static_cast<double>(n)));
    for (std::size_t i = 0; i < k; ++i) {
      listed.push_back(wc.curr[i].text);
      target.push_back({wc.curr[i].span, wc.curr[i].text, false, 0});
    }
  }
  if (desc.sep == SepMode::input_specifies_breaks) avg.reset();
  ex.input_text = alignment_input(desc.sep, desc.span, avg, left, listed, grammar);
  ex.target_text = render_timed_lines(target, abs.start_s, grammar, window);
  return ex;
}

std::string to_json_line(const ModelExample& ex) {
  const nlohmann::json j = {
      {"input_text", ex.input_text},
      {"target_text", ex.target_text},
      {"feature_ref", ex.feature_ref},
      {"frame_range", {ex.first_frame, ex.end_frame}},
      {"video_id", ex.clip.video_id},
      {"chunk_index", ex.clip.chunk_index},
      {"clip_start_s", ex.clip.start_s},
      {"clip_duration_s", ex.clip.duration_s},
      {"task", describe(ex.descriptor)},
  };
  return j.dump();
}

}  // namespace signtrack::grammar
