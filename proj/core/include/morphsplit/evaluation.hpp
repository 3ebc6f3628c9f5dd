#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/corpus.hpp"
#include "morphsplit/splitter.hpp"

namespace morphsplit {

struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const ScoreTriple&, const ScoreTriple&) = default;
};

// Match counts between a gold and a predicted item set.
struct MatchCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  MatchCounts& operator+=(const MatchCounts& o);
  // P is 1 when nothing was predicted and nothing was expected, 0 when
  // nothing was predicted but something was expected; R symmetrically.
  ScoreTriple score() const;
};

enum class F1Variant { kBoundary, kMorpheme };
enum class F1Average { kMicro, kMacro };

std::string_view to_string(F1Variant v);
std::string_view to_string(F1Average a);
F1Variant parse_f1_variant(std::string_view text);
F1Average parse_f1_average(std::string_view text);

// Internal split positions compared as sets. Throws ContractError when the
// surfaces differ.
MatchCounts boundary_counts(const SegmentedWord& gold, const SegmentedWord& pred);
ScoreTriple boundary_f1(const SegmentedWord& gold, const SegmentedWord& pred);

// Morphemes compared as (start, end, text) spans in cluster offsets.
MatchCounts morpheme_counts(const SegmentedWord& gold, const SegmentedWord& pred);
ScoreTriple morpheme_f1(const SegmentedWord& gold, const SegmentedWord& pred);

// Micro sums counts over words; macro averages per-word P, R and F1.
// Throws ContractError on length or surface mismatch and on empty input.
ScoreTriple corpus_f1(std::span<const SegmentedWord> gold, std::span<const SegmentedWord> pred, F1Variant variant,
                      F1Average average = F1Average::kMicro);

inline constexpr double kDefaultCollapseEpsilon = 0.02;

struct ModelRanking {
  std::vector<std::string> order;                // best first
  std::vector<std::vector<std::string>> groups;  // tie groups, same order
  double collapse_epsilon = kDefaultCollapseEpsilon;

  // "a > b = c > d"
  std::string to_string() const;
  friend bool operator==(const ModelRanking&, const ModelRanking&) = default;
};

// Descending by score, equal scores by model name. A model joins the
// previous tie group when its score is within collapse_epsilon (strictly
// less) of its predecessor's. Throws ContractError with fewer than 2 models.
ModelRanking rank_models(const std::map<std::string, double>& scores, double collapse_epsilon = kDefaultCollapseEpsilon);

// Same tie groups in the same order.
bool same_ranking(const ModelRanking& a, const ModelRanking& b);

// Fraction of eval morpheme types that also occur in train. Throws
// DomainError when eval is empty.
double morpheme_overlap(const Corpus& train, const Corpus& eval);

struct ModelScores {
  ScoreTriple boundary_eval, boundary_new;
  ScoreTriple morpheme_eval, morpheme_new;
  std::size_t seeds = 1;

  double eval_f1(F1Variant v) const { return v == F1Variant::kBoundary ? boundary_eval.f1 : morpheme_eval.f1; }
  double new_f1(F1Variant v) const { return v == F1Variant::kBoundary ? boundary_new.f1 : morpheme_new.f1; }
  friend bool operator==(const ModelScores&, const ModelScores&) = default;
};

struct CellResult {
  std::string cell_id;
  std::string language_tag;
  std::size_t fraction_index = 0;
  double fraction = 0.0;
  Strategy new_test_generation = Strategy::kRandom;
  Strategy residual_strategy = Strategy::kRandom;
  std::size_t train_size = 0, eval_size = 0, new_test_size = 0;
  double morpheme_overlap = 0.0;
  // train / eval ratios of word count, morphemes per word and morpheme
  // types per word.
  double word_count_ratio = 0.0;
  double morph_per_word_ratio = 0.0;
  double morph_type_per_word_ratio = 0.0;
  F1Variant variant = F1Variant::kBoundary;
  F1Average average = F1Average::kMicro;
  std::map<std::string, ModelScores> models;
  ModelRanking ranking_eval, ranking_new;

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

nlohmann::json to_json(const ScoreTriple& s);
nlohmann::json to_json(const ModelRanking& r);
nlohmann::json to_json(const CellResult& c);
CellResult cell_result_from_json(const nlohmann::json& j);

// Fills both rankings from the models' primary F1.
void rank_cell(CellResult& cell, double collapse_epsilon = kDefaultCollapseEpsilon);

// Throws DomainError on an empty list.
double ranking_consistency(std::span<const CellResult> results);

struct GeneralizationGap {
  double mean_signed = 0.0;  // mean(F1_eval - F1_new)
  double mean_abs = 0.0;
};

// Per model, over cells. Throws DomainError on an empty list.
std::map<std::string, GeneralizationGap> generalization_gap(std::span<const CellResult> results);

// Population standard deviation of new-test F1 per model. The caller
// selects the stratum; throws DomainError with fewer than 2 cells.
std::map<std::string, double> score_variability(std::span<const CellResult> results);

}  // namespace morphsplit
