#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 and whitespace helpers shared by the caption, grammar and metric code.
namespace signtrack::text {

/// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

/// Number of Unicode code points ("characters" everywhere in this project).
std::size_t char_count(std::string_view s);

/// Python str.isspace() semantics.
bool is_space(char32_t cp) noexcept;

std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);

/// Collapses whitespace runs to one ASCII space and trims both ends.
std::string normalize_whitespace(std::string_view s);

/// Whitespace-delimited pieces; views into `s`.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

/// edit_distance / max(len a, len b); 0 for two empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

}  // namespace signtrack::text
