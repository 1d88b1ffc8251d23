#pragma once

#include <string>
#include <string_view>

namespace csner::utf8 {

// Invalid byte sequences decode to U+FFFD one byte at a time.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
std::string encode(char32_t cp);

// Simple case mapping for ASCII and Latin-1 (covers the Spanish alphabet).
char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);

std::string lowercase(std::string_view s);
std::string capitalize_first(std::string_view s);

}  // namespace csner::utf8
