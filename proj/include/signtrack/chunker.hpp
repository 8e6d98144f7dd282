#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "signtrack/captions.hpp"
#include "signtrack/feature_track.hpp"
#include "signtrack/keyed_rng.hpp"

// Training-clip synthesis for long captioned videos: the video is cut into
// on-disk chunks of 2n seconds (3n/2 at the edges) that carry n seconds of
// caption context on either side, and every training example is a random
// sub-clip of one chunk.
namespace signtrack::chunker {

using captions::Caption;
using captions::CaptionTrack;
using captions::FeatureSlice;
using captions::FeatureTrack;
using captions::TimeSpan;

struct SamplerConfig {
  double n_s = 34.0;        // clip length / context radius
  double m_s = 17.0;        // shortest truncated clip
  double p_truncate = 0.2;  // probability that a clip is shortened to U[m, n]
  std::uint64_t seed = 0;

  /// Throws InvalidConfig unless 0 < m <= n and 0 <= p_truncate <= 1.
  void validate() const;
};

enum class ChunkPosition { first, interior, last, only };

std::string_view to_string(ChunkPosition p) noexcept;
ChunkPosition parse_chunk_position(std::string_view s);

struct ChunkSpan {
  TimeSpan span;
  ChunkPosition position;

  friend bool operator==(const ChunkSpan&, const ChunkSpan&) = default;
};

/// Tiles [0, duration] with a 3n/2 first chunk followed by 2n chunks. When
/// the remainder is shorter than 3n/2 the last full chunk and the remainder
/// become two overlapping chunks of equal length c = clamp(ceil(L/2), 3n/2, 2n)
/// anchored at both ends. Videos no longer than 3n/2 get one "only" chunk.
/// Boundaries are whole milliseconds. Throws NonPositiveDuration.
std::vector<ChunkSpan> chunk_layout(double video_duration_s, double n_s);

struct ChunkRecord {
  std::string video_id;
  std::size_t chunk_index = 0;
  TimeSpan span;
  ChunkPosition position = ChunkPosition::only;
  /// [span.start - n, span.end + n] clipped to the video.
  TimeSpan context_span;
  /// Every caption overlapping context_span, in absolute time.
  std::vector<Caption> context_captions;
  double video_duration_s = 0.0;
  /// Mean caption duration over the whole source video.
  double mean_caption_s = 0.0;
  /// Feature file for the context span ("" when the video has no features),
  /// and the frame range of the source track it was cut from.
  std::string feature_slice_ref;
  std::size_t first_frame = 0;
  std::size_t end_frame = 0;
  double fps = captions::kDefaultFps;

  double length() const { return span.duration(); }
};

std::vector<ChunkRecord> build_chunk_records(std::string_view video_id, const CaptionTrack& track,
                                             const FeatureTrack* features,
                                             const SamplerConfig& cfg);

/// File name of a chunk's feature slice: "{video_id}.{chunk_index}.feat".
std::string feature_slice_name(std::string_view video_id, std::size_t chunk_index);

struct ClipSpec {
  std::string video_id;
  std::size_t chunk_index = 0;
  double start_s = 0.0;  // relative to the chunk start
  double duration_s = 0.0;

  TimeSpan absolute(const ChunkRecord& chunk) const {
    return {chunk.span.start_s + start_s, chunk.span.start_s + start_s + duration_s};
  }

  friend bool operator==(const ClipSpec&, const ClipSpec&) = default;
};

/// Start position by chunk position:
///   interior          U[0, len/2]
///   first             max(0, U[-n/2, n])
///   last              min(len - n, U[0, len])
///   only, len < 3n/2  0
///   only, otherwise   U[0, len/2]
/// Duration is n, or U[m, n] with probability p_truncate, then shortened only
/// where the clip would run past the chunk's context span (the end of the
/// video). Times are whole milliseconds.
ClipSpec sample_clip(const ChunkRecord& chunk, const SamplerConfig& cfg, KeyedRng& rng);

/// Draw `draw_index` for this chunk, keyed by (cfg.seed, video_id, chunk_index, draw_index).
ClipSpec sample_clip(const ChunkRecord& chunk, const SamplerConfig& cfg, std::uint64_t draw_index);

/// Frames [floor(start * fps), floor(end * fps)) of the track. Throws
/// SpanOutOfRange when the span is inverted or extends past the track by more
/// than one frame.
FeatureSlice slice_features(const FeatureTrack& track, const TimeSpan& span);

std::string to_json_line(const ChunkRecord& record);
ChunkRecord chunk_record_from_json(std::string_view line);

}  // namespace signtrack::chunker
