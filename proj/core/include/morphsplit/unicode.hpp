#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace morphsplit {

// Splits UTF-8 text into extended grapheme clusters. All positions, labels,
// and boundaries in the library count clusters, not bytes or code points.
// Throws ValidationError on malformed UTF-8.
std::vector<std::string> graphemes(std::string_view utf8);

// Number of grapheme clusters in `utf8`.
std::size_t grapheme_count(std::string_view utf8);

bool is_valid_utf8(std::string_view text);

}  // namespace morphsplit
