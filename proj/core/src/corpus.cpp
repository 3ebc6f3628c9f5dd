#include "morphsplit/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "morphsplit/error.hpp"
#include "morphsplit/unicode.hpp"

namespace morphsplit {

SegmentedWord::SegmentedWord(std::string surface, std::vector<std::string> morphemes)
    : surface_(std::move(surface)), morphemes_(std::move(morphemes)) {
  if (surface_.empty()) throw ValidationError("empty surface");
  if (morphemes_.empty()) throw ValidationError("word '" + surface_ + "' has no morphemes");
  std::string joined;
  for (const auto& m : morphemes_) {
    if (m.empty()) throw ValidationError("word '" + surface_ + "' has an empty morpheme");
    joined += m;
  }
  if (joined != surface_) {
    throw ValidationError("morphemes of '" + surface_ + "' concatenate to '" + joined + "'");
  }
  length_ = grapheme_count(surface_);
  morpheme_lengths_.reserve(morphemes_.size());
  std::size_t total = 0;
  for (const auto& m : morphemes_) {
    morpheme_lengths_.push_back(grapheme_count(m));
    total += morpheme_lengths_.back();
  }
  // Concatenation can merge clusters but never split one, so equal counts
  // means every boundary falls between clusters.
  if (total != length_) {
    throw ValidationError("a morpheme boundary in '" + surface_ + "' splits a grapheme cluster");
  }
}

SegmentedWord SegmentedWord::from_boundaries(std::string_view surface,
                                             std::span<const std::size_t> boundaries) {
  const std::vector<std::string> clusters = graphemes(surface);
  std::vector<std::string> morphemes;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string m;
    for (std::size_t i = start; i < end; ++i) m += clusters[i];
    morphemes.push_back(std::move(m));
    start = end;
  };
  for (std::size_t b : boundaries) {
    if (b <= start || b >= clusters.size()) {
      throw ContractError("invalid boundary " + std::to_string(b) + " for '" + std::string(surface) + "'");
    }
    emit(b);
  }
  emit(clusters.size());
  return SegmentedWord(std::string(surface), std::move(morphemes));
}

std::vector<std::size_t> SegmentedWord::boundaries() const {
  std::vector<std::size_t> out;
  out.reserve(morpheme_lengths_.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i + 1 < morpheme_lengths_.size(); ++i) {
    pos += morpheme_lengths_[i];
    out.push_back(pos);
  }
  return out;
}

std::ostream& operator<<(std::ostream& os, const SegmentedWord& word) {
  for (std::size_t i = 0; i < word.morphemes().size(); ++i) {
    if (i) os << '+';
    os << word.morphemes()[i];
  }
  return os;
}

Corpus Corpus::from_words(std::string language_tag, std::vector<SegmentedWord> words, std::size_t* dropped) {
  Corpus c;
  c.language_tag_ = std::move(language_tag);
  std::unordered_set<std::string> seen;
  std::size_t dups = 0;
  for (auto& w : words) {
    if (!seen.insert(w.surface()).second) {
      ++dups;
      continue;
    }
    c.words_.push_back(std::move(w));
  }
  if (dropped) *dropped = dups;
  return c;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  Corpus c;
  c.language_tag_ = language_tag_;
  c.words_.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= words_.size()) throw ContractError("corpus index " + std::to_string(i) + " out of range");
    c.words_.push_back(words_[i]);
  }
  return c;
}

namespace {

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

ParsedCorpus parse_corpus(std::istream& in, std::string language_tag) {
  std::vector<SegmentedWord> words;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = rtrim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!is_valid_utf8(line)) throw ParseError(line_no, "invalid UTF-8");
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "missing tab separator");
    const std::string_view surface = line.substr(0, tab);
    const std::string_view rest = line.substr(tab + 1);
    if (surface.empty()) throw ParseError(line_no, "empty surface");
    if (rest.find('\t') != std::string_view::npos) throw ParseError(line_no, "more than one tab");
    std::vector<std::string> morphemes;
    std::size_t start = 0;
    while (true) {
      const auto space = rest.find(' ', start);
      const std::string_view piece = rest.substr(start, space == std::string_view::npos ? rest.npos : space - start);
      if (piece.empty()) throw ParseError(line_no, "empty morpheme");
      morphemes.emplace_back(piece);
      if (space == std::string_view::npos) break;
      start = space + 1;
    }
    try {
      words.emplace_back(std::string(surface), std::move(morphemes));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  ParsedCorpus out;
  out.corpus = Corpus::from_words(std::move(language_tag), std::move(words), &out.duplicates_dropped);
  return out;
}

ParsedCorpus parse_corpus(const std::filesystem::path& path, std::string language_tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in, std::move(language_tag));
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& w : corpus.words()) {
    out << w.surface() << '\t';
    for (std::size_t i = 0; i < w.morphemes().size(); ++i) {
      if (i) out << ' ';
      out << w.morphemes()[i];
    }
    out << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.empty()) throw DomainError("corpus_stats of an empty corpus");
  CorpusStats s;
  s.word_type_count = corpus.size();
  std::size_t morpheme_tokens = 0;
  std::size_t morpheme_chars = 0;
  std::unordered_set<std::string> types;
  for (const auto& w : corpus.words()) {
    morpheme_tokens += w.morpheme_count();
    for (std::size_t len : w.morpheme_lengths()) morpheme_chars += len;
    for (const auto& m : w.morphemes()) types.insert(m);
  }
  const double n = static_cast<double>(corpus.size());
  s.avg_morphemes_per_word = static_cast<double>(morpheme_tokens) / n;
  s.avg_morpheme_length = static_cast<double>(morpheme_chars) / static_cast<double>(morpheme_tokens);
  s.avg_morpheme_types_per_word = static_cast<double>(types.size()) / n;
  return s;
}

}  // namespace morphsplit
