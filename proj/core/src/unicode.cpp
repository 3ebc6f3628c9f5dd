#include "morphsplit/unicode.hpp"

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <memory>

#include "morphsplit/error.hpp"

namespace morphsplit {
namespace {

bool is_ascii(std::string_view text) {
  for (unsigned char c : text) {
    if (c >= 0x80) return false;
  }
  return true;
}

icu::BreakIterator& character_iterator() {
  // BreakIterator is not thread-safe; one instance per thread.
  thread_local std::unique_ptr<icu::BreakIterator> it = [] {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::BreakIterator> made(
        icu::BreakIterator::createCharacterInstance(icu::Locale::getRoot(), status));
    if (U_FAILURE(status) || !made) {
      throw Error(std::string("ICU character break iterator unavailable: ") +
                  u_errorName(status));
    }
    return made;
  }();
  return *it;
}

}  // namespace

bool is_valid_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

std::vector<std::string> graphemes(std::string_view utf8) {
  std::vector<std::string> out;
  if (utf8.empty()) return out;
  // CR LF is the only multi-character ASCII cluster.
  if (is_ascii(utf8) && utf8.find('\r') == std::string_view::npos) {
    out.reserve(utf8.size());
    for (char c : utf8) out.emplace_back(1, c);
    return out;
  }
  if (!is_valid_utf8(utf8)) throw ValidationError("malformed UTF-8 in '" + std::string(utf8) + "'");

  const icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::BreakIterator& it = character_iterator();
  it.setText(text);
  int32_t start = it.first();
  for (int32_t end = it.next(); end != icu::BreakIterator::DONE; start = end, end = it.next()) {
    std::string cluster;
    text.tempSubStringBetween(start, end).toUTF8String(cluster);
    out.push_back(std::move(cluster));
  }
  return out;
}

std::size_t grapheme_count(std::string_view utf8) { return graphemes(utf8).size(); }

}  // namespace morphsplit
