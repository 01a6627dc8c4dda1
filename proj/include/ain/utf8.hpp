#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ain::utf8 {

// Strict decode; throws FormatError on malformed sequences.
std::u32string decode(std::string_view bytes);
std::string encode(char32_t cp);
std::string encode(std::u32string_view text);
std::string encode(const std::vector<char32_t>& text);

// Decodes a string expected to hold exactly one codepoint.
char32_t single(std::string_view bytes);

}  // namespace ain::utf8
