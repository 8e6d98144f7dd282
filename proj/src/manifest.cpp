#include "signtrack/manifest.hpp"

#include <set>

#include <json.hpp>

#include "signtrack/error.hpp"

namespace signtrack::captions {

using nlohmann::json;

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::zs: return "zs";
    case Split::si_train: return "si-train";
    case Split::si_test: return "si-test";
    case Split::sd_train: return "sd-train";
    case Split::sd_test: return "sd-test";
  }
  return "zs";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  for (Split split : {Split::zs, Split::si_train, Split::si_test, Split::sd_train, Split::sd_test}) {
    if (s == to_string(split)) return split;
  }
  return std::nullopt;
}

namespace {

std::string at_line(std::size_t line) { return "manifest line " + std::to_string(line); }

const json& require(const json& record, const char* key, std::size_t line) {
  const auto it = record.find(key);
  if (it == record.end() || it->is_null()) {
    throw Error(Errc::MissingField, at_line(line) + ": missing '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& record, const char* key, std::size_t line) {
  const json& v = require(record, key, line);
  if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
    throw Error(Errc::MalformedRecord, at_line(line) + ": '" + key + "' must be a non-empty string");
  }
  return v.get<std::string>();
}

ManifestEntry parse_entry(std::string_view text, std::size_t line) {
  json record;
  try {
    record = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedRecord, at_line(line) + ": " + e.what());
  }
  if (!record.is_object()) throw Error(Errc::MalformedRecord, at_line(line) + ": not an object");

  ManifestEntry entry;
  entry.video_id = require_string(record, "video_id", line);

  const json& signer = require(record, "signer_id", line);
  if (!signer.is_number_integer() || signer.get<int>() < 0 || signer.get<int>() > 4) {
    throw Error(Errc::MalformedRecord, at_line(line) + ": signer_id must be an integer 0-4");
  }
  entry.signer_id = signer.get<int>();

  const std::string split = require_string(record, "split", line);
  const auto parsed = parse_split(split);
  if (!parsed) throw Error(Errc::UnknownSplit, at_line(line) + ": '" + split + "'");
  entry.split = *parsed;

  entry.article_id = require_string(record, "article_id", line);
  entry.caption_track_ref = require_string(record, "caption_track_ref", line);
  if (record.contains("feature_track_ref") && !record["feature_track_ref"].is_null()) {
    entry.feature_track_ref = require_string(record, "feature_track_ref", line);
  }
  if (record.contains("duration_s") && !record["duration_s"].is_null()) {
    const json& d = record["duration_s"];
    if (!d.is_number() || d.get<double>() < 0.0) {
      throw Error(Errc::MalformedRecord, at_line(line) + ": duration_s must be a non-negative number");
    }
    entry.duration_s = d.get<double>();
  }
  return entry;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(std::string_view bytes) {
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!bytes.empty()) {
    ++line_no;
    const auto nl = bytes.find('\n');
    std::string_view line = bytes.substr(0, nl);
    bytes.remove_prefix(nl == std::string_view::npos ? bytes.size() : nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    ManifestEntry entry = parse_entry(line, line_no);
    if (!seen.insert(entry.video_id).second) {
      throw Error(Errc::DuplicateVideoId, at_line(line_no) + ": '" + entry.video_id + "'");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string to_json_line(const ManifestEntry& entry) {
  json j = {
      {"video_id", entry.video_id},
      {"signer_id", entry.signer_id},
      {"split", std::string(to_string(entry.split))},
      {"article_id", entry.article_id},
      {"caption_track_ref", entry.caption_track_ref},
  };
  if (entry.feature_track_ref) j["feature_track_ref"] = *entry.feature_track_ref;
  if (entry.duration_s) j["duration_s"] = *entry.duration_s;
  return j.dump();
}

}  // namespace signtrack::captions
