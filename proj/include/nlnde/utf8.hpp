#ifndef NLNDE_UTF8_HPP
#define NLNDE_UTF8_HPP

#include <string>

namespace nlnde::utf8 {

// All character offsets in this project index Unicode scalar values, not
// bytes. Strings cross module boundaries as UTF-8; text processing happens
// on decoded std::u32string.

std::u32string decode(const std::string& s);
std::string encode(const std::u32string& s);

// Case handling covers ASCII plus the Latin-1 letters used in Spanish
// (á é í ó ú ü ñ and their capitals). Everything else maps to itself.
char32_t to_lower(char32_t c);
std::u32string to_lower(const std::u32string& s);

bool is_upper(char32_t c);
bool is_lower(char32_t c);
bool is_alpha(char32_t c);
bool is_digit(char32_t c);
bool is_space(char32_t c);

}  // namespace nlnde::utf8

#endif  // NLNDE_UTF8_HPP
