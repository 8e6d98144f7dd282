#include "signtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>
#include <unicode/uchar.h>

#include "signtrack/error.hpp"
#include "signtrack/text.hpp"

namespace signtrack::metrics {

namespace {

bool is_number(char32_t c) {
  const auto m = U_GET_GC_MASK(static_cast<UChar32>(c));
  return (m & U_GC_N_MASK) != 0;
}

bool is_punct(char32_t c) {
  return (U_GET_GC_MASK(static_cast<UChar32>(c)) & U_GC_P_MASK) != 0;
}

bool is_symbol(char32_t c) {
  return (U_GET_GC_MASK(static_cast<UChar32>(c)) & U_GC_S_MASK) != 0;
}

// One left-to-right, non-overlapping pass of a two-character pattern.
template <typename Match, typename Emit>
std::u32string pair_pass(const std::u32string& in, Match match, Emit emit) {
  std::u32string out;
  out.reserve(in.size() * 2);
  std::size_t i = 0;
  while (i < in.size()) {
    if (i + 1 < in.size() && match(in[i], in[i + 1])) {
      emit(out, in[i], in[i + 1]);
      i += 2;
    } else {
      out += in[i++];
    }
  }
  return out;
}

}  // namespace

std::string tokenize_intl(std::string_view text) {
  std::u32string s = text::decode_utf8(text);
  while (!s.empty() && text::is_space(s.back())) s.pop_back();
  // (\P{N})(\p{P}) -> "\1 \2 "
  s = pair_pass(
      s, [](char32_t a, char32_t b) { return !is_number(a) && is_punct(b); },
      [](std::u32string& o, char32_t a, char32_t b) {
        o += a;
        o += U' ';
        o += b;
        o += U' ';
      });
  // (\p{P})(\P{N}) -> " \1 \2"
  s = pair_pass(
      s, [](char32_t a, char32_t b) { return is_punct(a) && !is_number(b); },
      [](std::u32string& o, char32_t a, char32_t b) {
        o += U' ';
        o += a;
        o += U' ';
        o += b;
      });
  // (\p{S}) -> " \1 "
  std::u32string spaced;
  spaced.reserve(s.size() * 3);
  for (char32_t c : s) {
    if (is_symbol(c)) {
      spaced += U' ';
      spaced += c;
      spaced += U' ';
    } else {
      spaced += c;
    }
  }
  return text::normalize_whitespace(text::encode_utf8(spaced));
}

std::vector<std::string> tokenize_intl_tokens(std::string_view text) {
  const std::string joined = tokenize_intl(text);
  std::vector<std::string> out;
  for (auto piece : text::split_whitespace(joined)) out.emplace_back(piece);
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string_view>& tokens) {
  NgramCounts counts;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      ++counts[std::vector<std::string_view>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                             tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
  }
  return counts;
}

std::string bleu_signature() {
  return "nrefs:1|case:mixed|eff:no|tok:intl|smooth:none|version:" + std::string(kVersion);
}

}  // namespace

BleuReport corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  if (hypotheses.size() != references.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses for " +
                                          std::to_string(references.size()) + " references");
  }
  BleuReport r;
  r.signature = bleu_signature();
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const std::string hyp_tok = tokenize_intl(hypotheses[s]);
    const std::string ref_tok = tokenize_intl(references[s]);
    const auto hyp = text::split_whitespace(hyp_tok);
    const auto ref = text::split_whitespace(ref_tok);
    r.hyp_len += hyp.size();
    r.ref_len += ref.size();
    const NgramCounts ref_counts = count_ngrams(ref);
    for (const auto& [gram, count] : count_ngrams(hyp)) {
      const std::size_t order = gram.size() - 1;
      r.total[order] += count;
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) r.correct[order] += std::min(count, it->second);
    }
  }

  r.brevity_penalty = 1.0;
  if (r.hyp_len < r.ref_len) {
    r.brevity_penalty = r.hyp_len > 0 ? std::exp(1.0 - static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len))
                                      : 0.0;
  }
  if (std::all_of(r.correct.begin(), r.correct.end(), [](std::size_t c) { return c == 0; })) return r;

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    if (r.total[n] == 0) {
      zero = true;
      break;
    }
    if (r.correct[n] == 0) {
      zero = true;
      continue;
    }
    const double p = static_cast<double>(r.correct[n]) / static_cast<double>(r.total[n]);
    r.precisions[n] = 100.0 * p;
    log_sum += std::log(p);
  }
  r.score = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

// ---------------------------------------------------------------------------
// Timed BLEU

std::vector<double> char_times(const Caption& caption) {
  const std::size_t k = text::char_count(caption.text);
  std::vector<double> times(k);
  const double d = caption.span.duration();
  for (std::size_t i = 0; i < k; ++i) {
    times[i] = caption.span.start_s + (static_cast<double>(i) + 0.5) * d / static_cast<double>(k);
  }
  return times;
}

std::vector<std::string> reslice_by_reference(std::span<const Caption> hyp, std::span<const Caption> ref) {
  std::vector<std::string> segments(ref.size());
  // Hyp caption that last wrote into each segment, to put a space between pieces.
  std::vector<std::size_t> last_writer(ref.size(), static_cast<std::size_t>(-1));
  for (std::size_t h = 0; h < hyp.size(); ++h) {
    const std::u32string chars = text::decode_utf8(hyp[h].text);
    const auto times = char_times(hyp[h]);
    for (std::size_t i = 0; i < chars.size(); ++i) {
      const double t = times[i];
      // First reference ending after t; it covers t if it also starts at or before t.
      const auto it = std::upper_bound(ref.begin(), ref.end(), t,
                                       [](double v, const Caption& c) { return v < c.span.end_s; });
      if (it == ref.end() || it->span.start_s > t) continue;
      const auto j = static_cast<std::size_t>(it - ref.begin());
      if (last_writer[j] != h) {
        if (!segments[j].empty()) segments[j] += ' ';
        last_writer[j] = h;
      }
      text::append_utf8(segments[j], chars[i]);
    }
  }
  for (auto& s : segments) s = text::normalize_whitespace(s);
  return segments;
}

BleuReport timed_bleu(std::span<const Caption> hyp, std::span<const Caption> ref) {
  const auto segments = reslice_by_reference(hyp, ref);
  std::vector<std::string> refs;
  refs.reserve(ref.size());
  for (const Caption& c : ref) refs.push_back(c.text);
  return corpus_bleu(segments, refs);
}

std::string resliced_segments_jsonl(std::span<const std::string> hyp_segments, std::span<const Caption> ref,
                                    std::string_view video_id) {
  if (hyp_segments.size() != ref.size()) throw Error(Errc::LengthMismatch, "segment count differs from reference");
  std::string out;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const nlohmann::json j = {{"video_id", std::string(video_id)},
                              {"segment_id", i},
                              {"hyp_text", hyp_segments[i]},
                              {"ref_text", ref[i].text}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alignment

namespace {

constexpr long kBackground = -1;

std::vector<long> frame_labels(const CaptionTrack& track, std::size_t frames, double fps) {
  std::vector<long> labels(frames, kBackground);
  const auto caps = track.captions();
  std::size_t j = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = (static_cast<double>(f) + 0.5) / fps;
    while (j < caps.size() && caps[j].span.end_s <= t) ++j;
    if (j < caps.size() && caps[j].span.start_s <= t) labels[f] = static_cast<long>(j);
  }
  return labels;
}

}  // namespace

FrameCounts frame_counts(const CaptionTrack& pred, const CaptionTrack& ref, double eval_fps) {
  if (!(eval_fps > 0.0)) throw Error(Errc::InvalidConfig, "eval fps must be positive");
  if (std::abs(pred.video_duration_s() - ref.video_duration_s()) > 0.5 / eval_fps) {
    throw Error(Errc::DurationMismatch, "predicted track covers " + std::to_string(pred.video_duration_s()) +
                                            " s, reference " + std::to_string(ref.video_duration_s()) + " s");
  }
  const auto frames = static_cast<std::size_t>(std::llround(ref.video_duration_s() * eval_fps));
  const auto a = frame_labels(pred, frames, eval_fps);
  const auto b = frame_labels(ref, frames, eval_fps);
  FrameCounts c;
  c.total = frames;
  for (std::size_t f = 0; f < frames; ++f) c.matching += a[f] == b[f] ? 1 : 0;
  return c;
}

AlignmentReport aggregate_alignment(std::vector<VideoAlignment> per_video, double eval_fps) {
  AlignmentReport r;
  r.eval_fps = eval_fps;
  FrameCounts sum;
  for (const auto& v : per_video) {
    sum.matching += v.counts.matching;
    sum.total += v.counts.total;
  }
  r.frame_accuracy = sum.accuracy();
  r.per_video = std::move(per_video);
  return r;
}

AlignmentReport frame_accuracy(const CaptionTrack& pred, const CaptionTrack& ref, double eval_fps) {
  return aggregate_alignment({{"", frame_counts(pred, ref, eval_fps)}}, eval_fps);
}

CaptionTrack length_scaling_align(std::span<const std::string> caption_texts, const TimeSpan& span,
                                  double video_duration_s) {
  std::vector<std::size_t> lengths;
  std::size_t total = 0;
  for (const auto& t : caption_texts) {
    lengths.push_back(text::char_count(t));
    total += lengths.back();
  }
  if (total == 0) throw Error(Errc::EmptyTexts, "no caption characters to distribute");
  std::vector<Caption> out;
  out.reserve(caption_texts.size());
  std::size_t cumulative = 0;
  double start = span.start_s;
  for (std::size_t i = 0; i < caption_texts.size(); ++i) {
    cumulative += lengths[i];
    double end = i + 1 == caption_texts.size()
                     ? span.end_s
                     : captions::quantize_millis(span.start_s + span.duration() * static_cast<double>(cumulative) /
                                                                    static_cast<double>(total));
    end = std::clamp(end, start, span.end_s);
    out.push_back({{start, end}, caption_texts[i], i});
    start = end;
  }
  return CaptionTrack(std::move(out), std::max(span.end_s, video_duration_s));
}

// ---------------------------------------------------------------------------
// Reports

std::string to_json(const BleuReport& r, std::string_view metric) {
  nlohmann::json j = {
      {"metric", std::string(metric)},
      {"score", r.score},
      {"precisions", r.precisions},
      {"counts", r.correct},
      {"totals", r.total},
      {"bp", r.brevity_penalty},
      {"sys_len", r.hyp_len},
      {"ref_len", r.ref_len},
      {"signature", r.signature},
  };
  if (metric == "timed-bleu") j["note"] = "hypothesis characters outside every reference span are dropped";
  return j.dump();
}

std::string to_json(const AlignmentReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& v : r.per_video) {
    per.push_back({{"video_id", v.video_id},
                   {"matching_frames", v.counts.matching},
                   {"frames", v.counts.total},
                   {"frame_accuracy", v.counts.accuracy()}});
  }
  const nlohmann::json j = {{"metric", "frame-acc"},
                            {"frame_accuracy", r.frame_accuracy},
                            {"eval_fps", r.eval_fps},
                            {"per_video", std::move(per)}};
  return j.dump();
}

}  // namespace signtrack::metrics
