#include "signtrack/subtitle_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <tuple>
#include <vector>

#include "signtrack/error.hpp"

namespace signtrack::captions {
namespace {

struct Line {
  std::string_view text;
  std::size_t number;  // 1-based
};

std::vector<Line> split_lines(std::string_view bytes) {
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  std::vector<Line> lines;
  std::size_t number = 1;
  while (!bytes.empty()) {
    const auto nl = bytes.find('\n');
    std::string_view line = bytes.substr(0, nl);
    if (line.ends_with('\r')) line.remove_suffix(1);
    lines.push_back({line, number++});
    if (nl == std::string_view::npos) break;
    bytes.remove_prefix(nl + 1);
  }
  return lines;
}

bool blank_line(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

std::string location(std::size_t line, std::size_t col) {
  return "line " + std::to_string(line) + ", col " + std::to_string(col);
}

[[noreturn]] void malformed(std::size_t line, std::size_t col, const std::string& what) {
  throw Error(Errc::MalformedCue, location(line, col) + ": " + what);
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::int64_t digits_value(std::string_view s) {
  std::int64_t v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

// Parses a cue timestamp into milliseconds; nullopt on any deviation from the
// format's grammar. VTT allows the hour field to be omitted.
std::optional<std::int64_t> parse_timestamp(std::string_view s, SubtitleFormat format) {
  const char frac_sep = format == SubtitleFormat::vtt ? '.' : ',';
  const auto dot = s.rfind(frac_sep);
  if (dot == std::string_view::npos) return std::nullopt;
  const auto millis = s.substr(dot + 1);
  if (millis.size() != 3 || !all_digits(millis)) return std::nullopt;

  std::vector<std::string_view> fields;
  std::string_view hms = s.substr(0, dot);
  while (true) {
    const auto colon = hms.find(':');
    fields.push_back(hms.substr(0, colon));
    if (colon == std::string_view::npos) break;
    hms.remove_prefix(colon + 1);
  }
  if (fields.size() == 2 && format == SubtitleFormat::vtt) fields.insert(fields.begin(), "00");
  if (fields.size() != 3) return std::nullopt;
  const auto& [h, m, sec] = std::tie(fields[0], fields[1], fields[2]);
  if (h.size() < 2 || !all_digits(h) || m.size() != 2 || !all_digits(m) || sec.size() != 2 ||
      !all_digits(sec)) {
    return std::nullopt;
  }
  const std::int64_t mm = digits_value(m);
  const std::int64_t ss = digits_value(sec);
  if (mm > 59 || ss > 59) return std::nullopt;
  return ((digits_value(h) * 60 + mm) * 60 + ss) * 1000 + digits_value(millis);
}

struct CueTiming {
  std::int64_t start_ms;
  std::int64_t end_ms;
};

CueTiming parse_timing_line(const Line& line, SubtitleFormat format) {
  const auto arrow = line.text.find("-->");
  if (arrow == std::string_view::npos) malformed(line.number, 1, "expected cue timing line");

  auto lhs = line.text.substr(0, arrow);
  std::size_t lhs_col = 1;
  while (!lhs.empty() && (lhs.front() == ' ' || lhs.front() == '\t')) {
    lhs.remove_prefix(1);
    ++lhs_col;
  }
  while (!lhs.empty() && (lhs.back() == ' ' || lhs.back() == '\t')) lhs.remove_suffix(1);

  auto rhs = line.text.substr(arrow + 3);
  std::size_t rhs_col = arrow + 4;
  while (!rhs.empty() && (rhs.front() == ' ' || rhs.front() == '\t')) {
    rhs.remove_prefix(1);
    ++rhs_col;
  }
  // Anything after the end stamp is VTT cue settings.
  const auto settings = rhs.find_first_of(" \t");
  if (settings != std::string_view::npos) {
    if (format == SubtitleFormat::srt && !blank_line(rhs.substr(settings))) {
      malformed(line.number, rhs_col + settings, "unexpected text after end timestamp");
    }
    rhs = rhs.substr(0, settings);
  }

  const auto start = parse_timestamp(lhs, format);
  if (!start) malformed(line.number, lhs_col, "bad start timestamp '" + std::string(lhs) + "'");
  const auto end = parse_timestamp(rhs, format);
  if (!end) malformed(line.number, rhs_col, "bad end timestamp '" + std::string(rhs) + "'");
  return {*start, *end};
}

std::string unescape_vtt(std::string_view s) {
  static constexpr std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"},
      {"&nbsp;", "\xC2\xA0"}, {"&lrm;", "\xE2\x80\x8E"}, {"&rlm;", "\xE2\x80\x8F"},
  };
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    bool replaced = false;
    if (s[i] == '&') {
      for (const auto& [entity, value] : kEntities) {
        if (s.substr(i).starts_with(entity)) {
          out += value;
          i += entity.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += s[i++];
  }
  return out;
}

std::string escape_vtt(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct RawCue {
  CueTiming timing;
  std::string text;
  std::size_t line;
};

std::vector<std::vector<Line>> split_blocks(std::span<const Line> lines) {
  std::vector<std::vector<Line>> blocks;
  std::vector<Line> current;
  for (const Line& l : lines) {
    if (blank_line(l.text)) {
      if (!current.empty()) blocks.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(l);
    }
  }
  if (!current.empty()) blocks.push_back(std::move(current));
  return blocks;
}

std::string join_payload(std::span<const Line> payload, bool vtt) {
  std::string text;
  for (std::size_t i = 0; i < payload.size(); ++i) {
    if (i > 0) text += '\n';
    text += vtt ? unescape_vtt(payload[i].text) : std::string(payload[i].text);
  }
  return text;
}

bool is_keyword_block(std::string_view first, std::string_view keyword) {
  if (!first.starts_with(keyword)) return false;
  return first.size() == keyword.size() || first[keyword.size()] == ' ' ||
         first[keyword.size()] == '\t';
}

std::vector<RawCue> read_vtt(std::span<const Line> lines) {
  if (lines.empty() || !is_keyword_block(lines.front().text, "WEBVTT")) {
    malformed(1, 1, "missing WEBVTT signature");
  }
  auto blocks = split_blocks(lines);
  std::vector<RawCue> cues;
  // The first block is the header.
  for (std::size_t b = 1; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    const std::string_view first = block.front().text;
    const bool has_arrow = first.find("-->") != std::string_view::npos;
    if (!has_arrow && (is_keyword_block(first, "NOTE") || is_keyword_block(first, "STYLE") ||
                       is_keyword_block(first, "REGION"))) {
      continue;
    }
    const std::size_t timing_at = has_arrow ? 0 : 1;
    if (timing_at >= block.size()) malformed(block.front().number, 1, "cue has no timing line");
    const Line& timing_line = block[timing_at];
    RawCue cue{parse_timing_line(timing_line, SubtitleFormat::vtt), {}, timing_line.number};
    const auto payload = std::span<const Line>(block).subspan(timing_at + 1);
    if (payload.empty()) malformed(timing_line.number, 1, "cue has no text");
    cue.text = join_payload(payload, true);
    cues.push_back(std::move(cue));
  }
  return cues;
}

std::vector<RawCue> read_srt(std::span<const Line> lines) {
  std::vector<RawCue> cues;
  for (const auto& block : split_blocks(lines)) {
    std::size_t timing_at = 0;
    if (block.front().text.find("-->") == std::string_view::npos) {
      std::string_view index = block.front().text;
      while (!index.empty() && (index.back() == ' ' || index.back() == '\t')) index.remove_suffix(1);
      if (!all_digits(index)) malformed(block.front().number, 1, "expected numeric cue index");
      timing_at = 1;
    }
    if (timing_at >= block.size()) malformed(block.front().number, 1, "cue has no timing line");
    const Line& timing_line = block[timing_at];
    RawCue cue{parse_timing_line(timing_line, SubtitleFormat::srt), {}, timing_line.number};
    const auto payload = std::span<const Line>(block).subspan(timing_at + 1);
    if (payload.empty()) malformed(timing_line.number, 1, "cue has no text");
    cue.text = join_payload(payload, false);
    cues.push_back(std::move(cue));
  }
  return cues;
}

void check_representable(const Caption& c, std::size_t i) {
  const std::string_view t = c.text;
  if (t.find('\r') != std::string_view::npos) {
    throw Error(Errc::InvalidCaption,
                "caption " + std::to_string(i) + " contains a carriage return");
  }
  std::size_t pos = 0;
  while (true) {
    const auto nl = t.find('\n', pos);
    if (blank_line(t.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos))) {
      throw Error(Errc::InvalidCaption,
                  "caption " + std::to_string(i) + " contains a blank line");
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

}  // namespace

std::optional<SubtitleFormat> format_from_path(std::string_view path) {
  auto lower_ends_with = [&](std::string_view ext) {
    if (path.size() < ext.size()) return false;
    const auto tail = path.substr(path.size() - ext.size());
    return std::equal(tail.begin(), tail.end(), ext.begin(), [](char a, char b) {
      return std::tolower(static_cast<unsigned char>(a)) == b;
    });
  };
  if (lower_ends_with(".vtt")) return SubtitleFormat::vtt;
  if (lower_ends_with(".srt")) return SubtitleFormat::srt;
  return std::nullopt;
}

CaptionTrack parse_caption_file(std::string_view bytes, SubtitleFormat format,
                                std::optional<double> video_duration_s) {
  const auto lines = split_lines(bytes);
  const auto cues = format == SubtitleFormat::vtt ? read_vtt(lines) : read_srt(lines);

  std::vector<Caption> captions;
  captions.reserve(cues.size());
  for (std::size_t i = 0; i < cues.size(); ++i) {
    const RawCue& cue = cues[i];
    if (cue.timing.end_ms < cue.timing.start_ms) {
      throw Error(Errc::NonMonotonicTimes,
                  location(cue.line, 1) + ": cue ends before it starts");
    }
    if (i > 0) {
      const RawCue& prev = cues[i - 1];
      if (cue.timing.start_ms < prev.timing.start_ms) {
        throw Error(Errc::NonMonotonicTimes,
                    location(cue.line, 1) + ": cue starts before the previous cue");
      }
      if (cue.timing.start_ms < prev.timing.end_ms) {
        throw Error(Errc::OverlappingCues, location(cue.line, 1) +
                                               ": cue overlaps the previous cue (line " +
                                               std::to_string(prev.line) + ")");
      }
    }
    captions.push_back(Caption{{from_millis(cue.timing.start_ms), from_millis(cue.timing.end_ms)},
                               cue.text, i});
  }

  double duration = captions.empty() ? 0.0 : captions.back().span.end_s;
  if (video_duration_s) duration = std::max(duration, *video_duration_s);
  try {
    return CaptionTrack(std::move(captions), duration);
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidCaption) throw Error(Errc::MalformedCue, e.message());
    throw;
  }
}

std::string format_cue_time(double seconds, SubtitleFormat format) {
  const std::int64_t total = to_millis(seconds);
  const std::int64_t ms = total % 1000;
  const std::int64_t s = (total / 1000) % 60;
  const std::int64_t m = (total / 60000) % 60;
  const std::int64_t h = total / 3600000;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld%c%03lld", static_cast<long long>(h),
                static_cast<long long>(m), static_cast<long long>(s),
                format == SubtitleFormat::vtt ? '.' : ',', static_cast<long long>(ms));
  return buf;
}

std::string serialize_caption_file(const CaptionTrack& track, SubtitleFormat format,
                                   std::string_view note) {
  std::string out;
  if (format == SubtitleFormat::vtt) {
    out += "WEBVTT\n\n";
    if (!note.empty()) {
      if (note.find("-->") != std::string_view::npos || note.find('\n') != std::string_view::npos) {
        throw Error(Errc::InvalidTrack, "NOTE text must be a single line without '-->'");
      }
      out += "NOTE ";
      out += note;
      out += "\n\n";
    }
  }
  const auto caps = track.captions();
  for (std::size_t i = 0; i < caps.size(); ++i) {
    const Caption& c = caps[i];
    check_representable(c, i);
    out += std::to_string(i + 1);
    out += '\n';
    out += format_cue_time(c.span.start_s, format);
    out += " --> ";
    out += format_cue_time(c.span.end_s, format);
    out += '\n';
    out += format == SubtitleFormat::vtt ? escape_vtt(c.text) : c.text;
    out += "\n\n";
  }
  return out;
}

}  // namespace signtrack::captions
