#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pirate::text {

std::string_view trim(std::string_view s);

// NFC, Unicode case folding, whitespace runs collapsed to one ASCII space, trimmed.
std::string normalize(std::string_view s);

// Whitespace-separated tokens of normalize(s).
std::vector<std::string> words(std::string_view s);

// words(s) with every punctuation/symbol code point removed; empty tokens dropped.
std::vector<std::string> content_tokens(std::string_view s);

// Number of Unicode code points in a UTF-8 string.
std::size_t codepoint_count(std::string_view s);

// UTF-8 code points of s, each as its own string.
std::vector<std::string> codepoints(std::string_view s);

bool has_letter(std::string_view s);

std::uint64_t hash64(std::string_view s, std::uint64_t seed);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace pirate::text
