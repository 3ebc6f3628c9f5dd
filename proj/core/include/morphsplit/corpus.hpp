#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morphsplit {

// A surface word and its ordered surface-level morpheme decomposition.
// Morphemes always concatenate to the surface and never split a grapheme
// cluster; construction throws ValidationError otherwise.
class SegmentedWord {
 public:
  SegmentedWord(std::string surface, std::vector<std::string> morphemes);

  // Rebuilds a word from a surface and internal boundary positions
  // (grapheme offsets, strictly increasing, each in 1..length-1).
  static SegmentedWord from_boundaries(std::string_view surface, std::span<const std::size_t> boundaries);

  const std::string& surface() const { return surface_; }
  const std::vector<std::string>& morphemes() const { return morphemes_; }
  std::size_t morpheme_count() const { return morphemes_.size(); }

  // Length of the surface in grapheme clusters.
  std::size_t length() const { return length_; }

  // Internal split positions in grapheme offsets, ascending.
  std::vector<std::size_t> boundaries() const;

  // Cluster length of each morpheme, parallel to morphemes().
  const std::vector<std::size_t>& morpheme_lengths() const { return morpheme_lengths_; }

  friend bool operator==(const SegmentedWord& a, const SegmentedWord& b) {
    return a.surface_ == b.surface_ && a.morphemes_ == b.morphemes_;
  }

 private:
  std::string surface_;
  std::vector<std::string> morphemes_;
  std::vector<std::size_t> morpheme_lengths_;
  std::size_t length_ = 0;
};

std::ostream& operator<<(std::ostream& os, const SegmentedWord& word);

// A deduplicated, insertion-ordered set of word types.
class Corpus {
 public:
  Corpus() = default;

  // Keeps the first occurrence of each surface. `dropped`, when given,
  // receives the number of discarded duplicates.
  static Corpus from_words(std::string language_tag, std::vector<SegmentedWord> words,
                           std::size_t* dropped = nullptr);

  const std::string& language_tag() const { return language_tag_; }
  const std::vector<SegmentedWord>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const SegmentedWord& operator[](std::size_t i) const { return words_[i]; }

  // Words at `indices`, in the given order. Throws ContractError on an
  // out-of-range index.
  Corpus subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.language_tag_ == b.language_tag_ && a.words_ == b.words_;
  }

 private:
  std::string language_tag_;
  std::vector<SegmentedWord> words_;
};

struct ParsedCorpus {
  Corpus corpus;
  std::size_t duplicates_dropped = 0;
};

// Reads the `surface<TAB>morpheme( morpheme)*` format. Lines starting with
// '#' and blank lines are skipped; trailing whitespace is ignored.
ParsedCorpus parse_corpus(std::istream& in, std::string language_tag);
ParsedCorpus parse_corpus(const std::filesystem::path& path, std::string language_tag);

void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// FNV-1a digest of a file's bytes, used to tie run ledgers to their inputs.
std::uint64_t file_digest(const std::filesystem::path& path);

struct CorpusStats {
  std::size_t word_type_count = 0;
  double avg_morphemes_per_word = 0.0;
  // Mean morpheme length in grapheme clusters, over morpheme tokens.
  double avg_morpheme_length = 0.0;
  // Distinct morphemes in the corpus divided by the number of word types.
  double avg_morpheme_types_per_word = 0.0;
};

// Throws DomainError on an empty corpus.
CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace morphsplit
