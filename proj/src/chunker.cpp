#include "signtrack/chunker.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "signtrack/error.hpp"

namespace signtrack::chunker {

using captions::from_millis;
using captions::quantize_millis;
using captions::to_millis;
using nlohmann::json;

void SamplerConfig::validate() const {
  if (!(m_s > 0.0) || !(m_s <= n_s) || !std::isfinite(n_s)) {
    throw Error(Errc::InvalidConfig, "sampler requires 0 < m <= n");
  }
  if (!(p_truncate >= 0.0 && p_truncate <= 1.0)) {
    throw Error(Errc::InvalidConfig, "p_truncate must lie in [0, 1]");
  }
}

std::string_view to_string(ChunkPosition p) noexcept {
  switch (p) {
    case ChunkPosition::first: return "first";
    case ChunkPosition::interior: return "interior";
    case ChunkPosition::last: return "last";
    case ChunkPosition::only: return "only";
  }
  return "only";
}

ChunkPosition parse_chunk_position(std::string_view s) {
  for (auto p : {ChunkPosition::first, ChunkPosition::interior, ChunkPosition::last,
                 ChunkPosition::only}) {
    if (s == to_string(p)) return p;
  }
  throw Error(Errc::MalformedRecord, "unknown chunk position '" + std::string(s) + "'");
}

std::vector<ChunkSpan> chunk_layout(double video_duration_s, double n_s) {
  if (!(video_duration_s > 0.0) || !std::isfinite(video_duration_s)) {
    throw Error(Errc::NonPositiveDuration, "video duration must be positive");
  }
  if (!(n_s > 0.0)) throw Error(Errc::InvalidConfig, "n must be positive");

  const std::int64_t total = std::max<std::int64_t>(1, to_millis(video_duration_s));
  const std::int64_t n = to_millis(n_s);
  const std::int64_t edge = 3 * n / 2;
  const std::int64_t full = 2 * n;

  struct MsSpan {
    std::int64_t start, end;
    ChunkPosition position;
  };
  std::vector<MsSpan> spans;
  if (total <= edge) {
    spans.push_back({0, total, ChunkPosition::only});
  } else {
    spans.push_back({0, edge, ChunkPosition::first});
    std::int64_t pos = edge;
    while (total - pos > full) {
      spans.push_back({pos, pos + full, ChunkPosition::interior});
      pos += full;
    }
    const std::int64_t residue = total - pos;
    if (residue >= edge) {
      spans.push_back({pos, total, ChunkPosition::last});
    } else {
      // Fold the last tile and the short remainder into two overlapping chunks.
      MsSpan& tail = spans.back();
      const std::int64_t merged = total - tail.start;
      const std::int64_t c = std::clamp((merged + 1) / 2, edge, full);
      tail.end = tail.start + c;
      spans.push_back({total - c, total, ChunkPosition::last});
    }
  }

  std::vector<ChunkSpan> out;
  out.reserve(spans.size());
  for (const auto& s : spans) {
    out.push_back({{from_millis(s.start), from_millis(s.end)}, s.position});
  }
  // The last boundary is the exact duration, not its millisecond rounding.
  out.back().span.end_s = video_duration_s;
  return out;
}

std::string feature_slice_name(std::string_view video_id, std::size_t chunk_index) {
  return std::string(video_id) + "." + std::to_string(chunk_index) + ".feat";
}

std::vector<ChunkRecord> build_chunk_records(std::string_view video_id, const CaptionTrack& track,
                                             const FeatureTrack* features,
                                             const SamplerConfig& cfg) {
  cfg.validate();
  const double duration = track.video_duration_s();
  const double mean = track.mean_caption_duration();
  std::vector<ChunkRecord> records;
  const auto layout = chunk_layout(duration, cfg.n_s);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    ChunkRecord r;
    r.video_id = std::string(video_id);
    r.chunk_index = i;
    r.span = layout[i].span;
    r.position = layout[i].position;
    r.context_span = {std::max(0.0, r.span.start_s - cfg.n_s),
                      std::min(duration, r.span.end_s + cfg.n_s)};
    for (const Caption& c : track.captions()) {
      if (c.span.start_s < r.context_span.end_s && c.span.end_s > r.context_span.start_s) {
        r.context_captions.push_back(c);
      }
    }
    r.video_duration_s = duration;
    r.mean_caption_s = mean;
    if (features != nullptr) {
      const FeatureSlice slice = slice_features(*features, r.context_span);
      r.feature_slice_ref = feature_slice_name(video_id, i);
      r.first_frame = slice.first_frame;
      r.end_frame = slice.end_frame;
      r.fps = features->fps();
    }
    records.push_back(std::move(r));
  }
  return records;
}

ClipSpec sample_clip(const ChunkRecord& chunk, const SamplerConfig& cfg, KeyedRng& rng) {
  const double len = chunk.length();
  const double n = cfg.n_s;
  double start = 0.0;
  switch (chunk.position) {
    case ChunkPosition::first:
      start = std::max(0.0, rng.uniform(-n / 2.0, n));
      break;
    case ChunkPosition::last:
      start = std::min(len - n, rng.uniform(0.0, len));
      break;
    case ChunkPosition::interior:
      start = rng.uniform(0.0, len / 2.0);
      break;
    case ChunkPosition::only:
      start = len < 1.5 * n ? 0.0 : rng.uniform(0.0, len / 2.0);
      break;
  }
  start = std::max(0.0, quantize_millis(start));

  double duration = n;
  if (rng.uniform() < cfg.p_truncate) duration = quantize_millis(rng.uniform(cfg.m_s, n));

  const double available = chunk.context_span.end_s - (chunk.span.start_s + start);
  if (duration > available) duration = std::max(0.0, quantize_millis(available));
  return {chunk.video_id, chunk.chunk_index, start, duration};
}

ClipSpec sample_clip(const ChunkRecord& chunk, const SamplerConfig& cfg, std::uint64_t draw_index) {
  auto rng = KeyedRng::for_record(cfg.seed, chunk.video_id, chunk.chunk_index, draw_index, "clip");
  return sample_clip(chunk, cfg, rng);
}

FeatureSlice slice_features(const FeatureTrack& track, const TimeSpan& span) {
  const double fps = track.fps();
  const double frame = 1.0 / fps;
  if (!(span.start_s >= 0.0) || span.end_s < span.start_s ||
      span.end_s > track.duration_s() + frame) {
    throw Error(Errc::SpanOutOfRange, "span [" + std::to_string(span.start_s) + ", " +
                                          std::to_string(span.end_s) + "] outside feature track of " +
                                          std::to_string(track.duration_s()) + " s");
  }
  // The epsilon keeps products like 2.3 * 10 from flooring one frame short.
  constexpr double kEps = 1e-6;
  const auto to_frame = [&](double t) {
    return std::min(track.frame_count(), static_cast<std::size_t>(std::floor(t * fps + kEps)));
  };
  FeatureSlice slice;
  slice.track = &track;
  slice.first_frame = to_frame(span.start_s);
  slice.end_frame = std::max(slice.first_frame, to_frame(span.end_s));
  slice.start_s = span.start_s;
  slice.end_s = span.end_s;
  return slice;
}

std::string to_json_line(const ChunkRecord& r) {
  json caps = json::array();
  for (const Caption& c : r.context_captions) {
    caps.push_back({{"index", c.index}, {"start_s", c.span.start_s}, {"end_s", c.span.end_s},
                    {"text", c.text}});
  }
  json j = {
      {"video_id", r.video_id},
      {"chunk_index", r.chunk_index},
      {"span", {r.span.start_s, r.span.end_s}},
      {"position", std::string(to_string(r.position))},
      {"context_span", {r.context_span.start_s, r.context_span.end_s}},
      {"context_captions", std::move(caps)},
      {"video_duration_s", r.video_duration_s},
      {"mean_caption_s", r.mean_caption_s},
      {"feature_slice_ref", r.feature_slice_ref},
      {"frame_range", {r.first_frame, r.end_frame}},
      {"fps", r.fps},
  };
  return j.dump();
}

ChunkRecord chunk_record_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    ChunkRecord r;
    r.video_id = j.at("video_id").get<std::string>();
    r.chunk_index = j.at("chunk_index").get<std::size_t>();
    r.span = {j.at("span").at(0).get<double>(), j.at("span").at(1).get<double>()};
    r.position = parse_chunk_position(j.at("position").get<std::string>());
    r.context_span = {j.at("context_span").at(0).get<double>(),
                      j.at("context_span").at(1).get<double>()};
    for (const json& c : j.at("context_captions")) {
      r.context_captions.push_back(Caption{{c.at("start_s").get<double>(), c.at("end_s").get<double>()},
                                           c.at("text").get<std::string>(),
                                           c.at("index").get<std::size_t>()});
    }
    r.video_duration_s = j.at("video_duration_s").get<double>();
    r.mean_caption_s = j.at("mean_caption_s").get<double>();
    r.feature_slice_ref = j.at("feature_slice_ref").get<std::string>();
    r.first_frame = j.at("frame_range").at(0).get<std::size_t>();
    r.end_frame = j.at("frame_range").at(1).get<std::size_t>();
    r.fps = j.at("fps").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("chunk record: ") + e.what());
  }
}

}  // namespace signtrack::chunker
