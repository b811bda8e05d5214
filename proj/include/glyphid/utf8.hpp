#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace glyphid::utf8 {

/// Decode one codepoint starting at `pos`; advances `pos` past it.
/// Throws ParseError on malformed input.
char32_t decode_one(std::string_view text, size_t& pos);

std::vector<char32_t> decode(std::string_view text);

std::string encode(char32_t cp);

/// Parse "U+XXXX" (4-6 hex digits) into a codepoint.
char32_t parse_codepoint_ref(std::string_view text);

std::string codepoint_ref(char32_t cp);

/// Number of codepoints in a valid UTF-8 string.
size_t length(std::string_view text);

} // namespace glyphid::utf8
