#include "morphsplit/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_set>

#include "morphsplit/error.hpp"
#include "morphsplit/random.hpp"

namespace morphsplit {
namespace {

constexpr std::string_view kConsonants = "ptkmnslrhwgdb";
constexpr std::string_view kVowels = "aeiou";

char pick(Rng& rng, std::string_view from) { return from[rng.below(from.size())]; }

std::string make_stem(Rng& rng) {
  std::string s;
  const std::size_t syllables = 2 + rng.below(2);
  for (std::size_t i = 0; i < syllables; ++i) {
    s += pick(rng, kConsonants);
    s += pick(rng, kVowels);
  }
  if (rng.below(2)) s += pick(rng, kConsonants);
  return s;
}

std::string make_suffix(Rng& rng) {
  switch (rng.below(3)) {
    case 0: return {pick(rng, kVowels), pick(rng, kConsonants)};
    case 1: return {pick(rng, kConsonants), pick(rng, kVowels)};
    default: return {pick(rng, kConsonants), pick(rng, kVowels), pick(rng, kConsonants)};
  }
}

std::vector<std::string> make_inventory(Rng& rng, std::size_t count, std::string (*make)(Rng&)) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 10)) throw CapacityError("cannot generate distinct inventory forms");
    std::string form = make(rng);
    if (seen.insert(form).second) out.push_back(std::move(form));
  }
  return out;
}

// All increasing index subsets of {0..n-1} with size in [lo, hi].
std::vector<std::vector<std::size_t>> suffix_patterns(std::size_t n, std::size_t lo, std::size_t hi) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t next) -> void {
    if (cur.size() >= lo) out.push_back(cur);
    if (cur.size() == hi) return;
    for (std::size_t i = next; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  std::vector<std::string> stems = spec.stems;
  std::vector<std::string> suffixes = spec.suffixes;
  if (stems.empty()) stems = make_inventory(rng, spec.stem_count, make_stem);
  if (suffixes.empty()) suffixes = make_inventory(rng, spec.suffix_count, make_suffix);
  if (stems.empty()) throw ContractError("synthetic corpus needs at least one stem");
  if (suffixes.empty() && spec.min_suffixes > 0) throw ContractError("synthetic corpus needs at least one suffix");
  if (spec.min_suffixes > spec.max_suffixes) throw ContractError("min_suffixes exceeds max_suffixes");

  const auto patterns = suffix_patterns(suffixes.size(), spec.min_suffixes,
                                        std::min(spec.max_suffixes, suffixes.size()));
  const std::size_t combos = stems.size() * patterns.size();
  if (combos < spec.word_count) {
    throw CapacityError("requested " + std::to_string(spec.word_count) + " words but only " +
                        std::to_string(combos) + " stem/suffix combinations exist");
  }

  std::vector<std::size_t> order(combos);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<SegmentedWord> words;
  std::unordered_set<std::string> seen;
  for (std::size_t code : order) {
    if (words.size() == spec.word_count) break;
    const auto& stem = stems[code / patterns.size()];
    const auto& pattern = patterns[code % patterns.size()];
    std::vector<std::string> morphemes{stem};
    std::string surface = stem;
    for (std::size_t s : pattern) {
      morphemes.push_back(suffixes[s]);
      surface += suffixes[s];
    }
    if (!seen.insert(surface).second) continue;
    words.emplace_back(std::move(surface), std::move(morphemes));
  }
  if (words.size() < spec.word_count) {
    throw CapacityError("only " + std::to_string(words.size()) + " distinct surfaces available, requested " +
                        std::to_string(spec.word_count));
  }
  return Corpus::from_words(spec.language_tag, std::move(words));
}

}  // namespace morphsplit
