#include "morphsplit/labels.hpp"

#include "morphsplit/error.hpp"
#include "morphsplit/unicode.hpp"

namespace morphsplit {

std::string_view label_name(Label l) {
  switch (l) {
    case Label::kStart: return "START";
    case Label::kEnd: return "END";
    case Label::kS: return "S";
    case Label::kB: return "B";
    case Label::kM: return "M";
    case Label::kE: return "E";
  }
  return "?";
}

bool is_valid_label_sequence(std::span<const Label> labels) {
  if (labels.size() < 3) return false;
  if (labels.front() != Label::kStart || labels.back() != Label::kEnd) return false;
  Label prev = Label::kStart;
  for (std::size_t i = 1; i + 1 < labels.size(); ++i) {
    const Label cur = labels[i];
    if (cur == Label::kStart || cur == Label::kEnd) return false;
    const bool open = prev == Label::kB || prev == Label::kM;
    const bool continues = cur == Label::kM || cur == Label::kE;
    if (open != continues) return false;
    prev = cur;
  }
  return prev == Label::kE || prev == Label::kS;
}

LabelSequence encode_labels(const SegmentedWord& word) {
  LabelSequence out;
  out.reserve(word.length() + 2);
  out.push_back(Label::kStart);
  for (std::size_t len : word.morpheme_lengths()) {
    if (len == 1) {
      out.push_back(Label::kS);
      continue;
    }
    out.push_back(Label::kB);
    for (std::size_t i = 1; i + 1 < len; ++i) out.push_back(Label::kM);
    out.push_back(Label::kE);
  }
  out.push_back(Label::kEnd);
  return out;
}

SegmentedWord decode_interior(std::string_view surface, std::span<const Label> interior) {
  const std::size_t n = grapheme_count(surface);
  if (interior.size() != n) {
    throw ContractError("label count " + std::to_string(interior.size()) + " does not match " +
                        std::to_string(n) + " characters of '" + std::string(surface) + "'");
  }
  std::vector<std::size_t> boundaries;
  for (std::size_t i = 1; i < n; ++i) {
    const Label cur = interior[i];
    const Label prev = interior[i - 1];
    const bool opens = cur == Label::kB || cur == Label::kS;
    const bool after_close = prev == Label::kE || prev == Label::kS;
    if (opens || after_close) boundaries.push_back(i);
  }
  return SegmentedWord::from_boundaries(surface, boundaries);
}

SegmentedWord decode_labels(std::string_view surface, std::span<const Label> labels) {
  const std::size_t n = grapheme_count(surface);
  if (labels.size() != n + 2) {
    throw ContractError("label sequence of length " + std::to_string(labels.size()) + " for " +
                        std::to_string(n) + " characters of '" + std::string(surface) + "'");
  }
  return decode_interior(surface, labels.subspan(1, n));
}

LabelSequence repair_labels(std::string_view surface, std::span<const Label> labels) {
  return encode_labels(decode_labels(surface, labels));
}

}  // namespace morphsplit
