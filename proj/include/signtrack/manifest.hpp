#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace signtrack::captions {

enum class Split { zs, si_train, si_test, sd_train, sd_test };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

struct ManifestEntry {
  std::string video_id;
  int signer_id = 0;  // 0-4
  Split split = Split::zs;
  std::string article_id;
  std::string caption_track_ref;
  std::optional<std::string> feature_track_ref;
  /// Optional explicit video length; otherwise derived from features or captions.
  std::optional<double> duration_s;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// One JSON object per line; blank lines are skipped. Errors carry the line
/// number: UnknownSplit, DuplicateVideoId, MissingField, MalformedRecord.
std::vector<ManifestEntry> load_manifest(std::string_view bytes);

std::string to_json_line(const ManifestEntry& entry);

}  // namespace signtrack::captions
