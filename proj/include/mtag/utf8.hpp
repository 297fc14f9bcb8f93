#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mtag::utf8 {

/// Byte offsets of every code point start, plus a final entry equal to s.size().
/// Invalid bytes are treated as single-byte code points.
std::vector<std::size_t> boundaries(std::string_view s);

std::size_t length(std::string_view s);

char32_t decode_first(std::string_view s);

void append(std::string& out, char32_t cp);

// Simple case mapping for Latin, Greek and Cyrillic blocks. Other scripts are
// caseless and pass through unchanged.
char32_t to_lower(char32_t cp);
bool is_upper(char32_t cp);

std::string lowercase(std::string_view s);

}  // namespace mtag::utf8
