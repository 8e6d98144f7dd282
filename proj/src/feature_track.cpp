#include "signtrack/feature_track.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "signtrack/error.hpp"

namespace signtrack::captions {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'N', 'F'};
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::string& out, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + offset, 4);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  return v;
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }
float get_f32(std::string_view bytes, std::size_t offset) {
  return std::bit_cast<float>(get_u32(bytes, offset));
}

std::string encode(double fps, std::size_t dim, std::size_t frames, std::span<const float> values) {
  std::string out;
  out.reserve(kHeaderSize + values.size() * 4);
  out.append(kMagic, 4);
  put_f32(out, static_cast<float>(fps));
  put_u32(out, static_cast<std::uint32_t>(dim));
  put_u32(out, static_cast<std::uint32_t>(frames));
  for (float v : values) put_f32(out, v);
  return out;
}

}  // namespace

FeatureTrack::FeatureTrack(double fps, std::size_t dim, std::size_t frame_count,
                           std::vector<float> values)
    : fps_(fps), dim_(dim), frame_count_(frame_count), values_(std::move(values)) {
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) {
    throw Error(Errc::MalformedFeatureFile, "fps must be positive");
  }
  if (values_.size() != frame_count_ * dim_) {
    throw Error(Errc::MalformedFeatureFile, "payload size does not match frame_count * dim");
  }
}

FeatureTrack FeatureTrack::timeline(double duration_s, double fps) {
  const auto frames = static_cast<std::size_t>(std::llround(duration_s * fps));
  return FeatureTrack(fps, 0, frames, {});
}

std::span<const float> FeatureTrack::frame(std::size_t i) const {
  return std::span<const float>(values_).subspan(i * dim_, dim_);
}

std::span<const float> FeatureSlice::values() const {
  if (!track) return {};
  return track->values().subspan(first_frame * track->dim(), frame_count() * track->dim());
}

std::string encode_feature_file(const FeatureTrack& track) {
  return encode(track.fps(), track.dim(), track.frame_count(), track.values());
}

std::string encode_feature_file(const FeatureSlice& slice) {
  const std::size_t dim = slice.track ? slice.track->dim() : 0;
  return encode(slice.fps(), dim, slice.frame_count(), slice.values());
}

FeatureTrack decode_feature_file(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::MalformedFeatureFile, "missing SGNF header");
  }
  const double fps = get_f32(bytes, 4);
  const std::size_t dim = get_u32(bytes, 8);
  const std::size_t frames = get_u32(bytes, 12);
  const std::size_t expected = kHeaderSize + frames * dim * 4;
  if (bytes.size() != expected) {
    throw Error(Errc::MalformedFeatureFile, "expected " + std::to_string(expected) +
                                                " bytes, found " + std::to_string(bytes.size()));
  }
  std::vector<float> values(frames * dim);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f32(bytes, kHeaderSize + i * 4);
  return FeatureTrack(fps, dim, frames, std::move(values));
}

}  // namespace signtrack::captions
