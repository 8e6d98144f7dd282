#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace signtrack::captions {

inline constexpr double kDefaultFps = 15.0;

/// Per-frame feature vectors for one video. The payload is opaque to this
/// project; only its timeline (fps, frame count) matters here. `dim` may be 0
/// for a timeline-only track.
class FeatureTrack {
 public:
  FeatureTrack() = default;
  /// `values.size()` must equal frame_count * dim.
  FeatureTrack(double fps, std::size_t dim, std::size_t frame_count, std::vector<float> values);

  /// A dim-0 track covering `duration_s` at `fps`.
  static FeatureTrack timeline(double duration_s, double fps = kDefaultFps);

  double fps() const { return fps_; }
  std::size_t dim() const { return dim_; }
  std::size_t frame_count() const { return frame_count_; }
  double duration_s() const { return fps_ > 0 ? static_cast<double>(frame_count_) / fps_ : 0.0; }
  std::span<const float> values() const { return values_; }
  std::span<const float> frame(std::size_t i) const;

  /// Path the track was read from, forwarded to external translators.
  const std::string& source_path() const { return source_path_; }
  void set_source_path(std::string path) { source_path_ = std::move(path); }

 private:
  double fps_ = kDefaultFps;
  std::size_t dim_ = 0;
  std::size_t frame_count_ = 0;
  std::vector<float> values_;
  std::string source_path_;
};

/// A half-open frame range [first_frame, end_frame) of a track plus the time
/// span it was cut for. Non-owning: the track must outlive the slice.
struct FeatureSlice {
  const FeatureTrack* track = nullptr;
  std::size_t first_frame = 0;
  std::size_t end_frame = 0;
  double start_s = 0.0;
  double end_s = 0.0;

  std::size_t frame_count() const { return end_frame - first_frame; }
  double fps() const { return track ? track->fps() : kDefaultFps; }
  std::span<const float> values() const;
};

/// Binary layout: 16-byte header (magic "SGNF", fps f32, dim u32, frame count
/// u32), then frame_count * dim f32 values. Everything little-endian.
std::string encode_feature_file(const FeatureTrack& track);
std::string encode_feature_file(const FeatureSlice& slice);
FeatureTrack decode_feature_file(std::string_view bytes);

}  // namespace signtrack::captions
