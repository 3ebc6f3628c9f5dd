#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "morphsplit/corpus.hpp"

namespace morphsplit {

// Parameters of a synthetic agglutinative language: every word is a stem
// followed by an ordered subset of suffixes (suffixes keep their inventory
// order, like fixed affix slots).
struct SyntheticSpec {
  // Explicit inventories. When empty, `stem_count` / `suffix_count` random
  // CV-syllable forms are generated instead.
  std::vector<std::string> stems;
  std::vector<std::string> suffixes;
  std::size_t stem_count = 0;
  std::size_t suffix_count = 0;
  std::size_t min_suffixes = 1;
  std::size_t max_suffixes = 3;
  std::size_t word_count = 0;
  std::uint64_t seed = 0;
  std::string language_tag = "synthetic";
};

// Deterministic for a fixed spec. Throws CapacityError when fewer than
// `word_count` distinct surfaces can be formed, ContractError on an empty
// inventory.
Corpus generate_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace morphsplit
