#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "morphsplit/corpus.hpp"

namespace morphsplit {

// Per-character segmentation labels. The numeric order is the tie-breaking
// order used by decoders: lower index wins.
enum class Label : std::uint8_t { kStart = 0, kEnd = 1, kS = 2, kB = 3, kM = 4, kE = 5 };

inline constexpr std::size_t kNumLabels = 6;
inline constexpr std::array<Label, kNumLabels> kAllLabels = {Label::kStart, Label::kEnd, Label::kS,
                                                             Label::kB,     Label::kM,   Label::kE};

inline constexpr std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }
inline constexpr Label label_at(std::size_t i) { return static_cast<Label>(i); }

std::string_view label_name(Label l);

// START, one label per grapheme cluster, END.
using LabelSequence = std::vector<Label>;

bool is_valid_label_sequence(std::span<const Label> labels);

// |result| = word.length() + 2.
LabelSequence encode_labels(const SegmentedWord& word);

// Total inverse of encode_labels. Interior labels are read with a repair
// rule so any sequence yields a valid word: a morpheme opens before B or S,
// and before M or E when the previous interior label was E or S. Interior
// START/END labels behave like M. The first and last labels are ignored.
// Throws ContractError unless |labels| = length(surface) + 2.
SegmentedWord decode_labels(std::string_view surface, std::span<const Label> labels);

// Same rule over interior labels only (|interior| = cluster count).
SegmentedWord decode_interior(std::string_view surface, std::span<const Label> interior);

// encode_labels(decode_labels(surface, labels)).
LabelSequence repair_labels(std::string_view surface, std::span<const Label> labels);

}  // namespace morphsplit
