#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/corpus.hpp"
#include "morphsplit/features.hpp"
#include "morphsplit/optimizer.hpp"

namespace morphsplit {

inline constexpr double kDefaultUnigramSmoothing = 0.1;

// Morpheme unigram model with additive smoothing and one out-of-vocabulary
// class: p(m) = (count(m) + s) / (total + s * (V + 1)), count 0 for OOV.
class UnigramModel {
 public:
  using Counts = std::map<std::string, std::size_t, std::less<>>;

  UnigramModel(Counts counts, double smoothing);

  double log_probability(std::string_view morpheme) const;
  const Counts& counts() const { return counts_; }
  double smoothing() const { return smoothing_; }
  std::size_t total() const { return total_; }

  // Maximises the summed log probability over all segmentations; ties go
  // to fewer morphemes, then to the longer final morpheme.
  SegmentedWord segment(std::string_view surface) const;

  friend bool operator==(const UnigramModel& a, const UnigramModel& b) {
    return a.counts_ == b.counts_ && a.smoothing_ == b.smoothing_;
  }

 private:
  Counts counts_;
  double smoothing_;
  std::size_t total_ = 0;
  double log_denominator_ = 0.0;
};

// Throws ContractError on an empty corpus or smoothing <= 0.
UnigramModel train_unigram_viterbi(const Corpus& corpus, double smoothing = kDefaultUnigramSmoothing);

nlohmann::json to_json(const UnigramModel& m);
UnigramModel unigram_model_from_json(const nlohmann::json& j);

// Logistic regression on each gap between adjacent clusters. Features are
// the template features of the left cluster prefixed "L|" and of the right
// cluster prefixed "R|". weights[0] is an unregularised bias, weights[1 + f]
// belongs to feature id f.
class BoundaryLogisticModel {
 public:
  BoundaryLogisticModel(FeatureTemplate tmpl, FeatureIndex index, std::vector<double> weights, double l2_lambda);

  const FeatureTemplate& feature_template() const { return template_; }
  const FeatureIndex& feature_index() const { return index_; }
  const std::vector<double>& weights() const { return weights_; }
  double l2_lambda() const { return l2_lambda_; }

  // Known feature ids of each gap (|result| = clusters - 1).
  std::vector<std::vector<std::uint32_t>> compile(std::string_view surface) const;

  // Probability of a boundary after cluster `gap` (0-based).
  double boundary_probability(std::string_view surface, std::size_t gap) const;

  // A boundary wherever the probability is strictly above 0.5.
  SegmentedWord segment(std::string_view surface) const;

  friend bool operator==(const BoundaryLogisticModel&, const BoundaryLogisticModel&) = default;

 private:
  FeatureTemplate template_;
  FeatureIndex index_;
  std::vector<double> weights_;
  double l2_lambda_;
};

// Gap feature names for one word, sorted per gap.
std::vector<std::vector<std::string>> gap_features(std::span<const std::string> clusters, const FeatureTemplate& tmpl);

struct LogisticGradient {
  double objective = 0.0;
  std::vector<double> gradient;
};

// Mean log-loss over every gap of the batch plus l2/2 * |w[1:]|^2. A batch
// without gaps has objective equal to the penalty alone.
LogisticGradient logistic_gradient(const BoundaryLogisticModel& model, std::span<const SegmentedWord> batch);

BoundaryLogisticModel train_boundary_logistic(const Corpus& corpus, const FeatureTemplate& tmpl,
                                              const TrainConfig& config, std::vector<double>* history = nullptr);

nlohmann::json to_json(const BoundaryLogisticModel& m);
BoundaryLogisticModel boundary_logistic_from_json(const nlohmann::json& j);

// Greedy left-to-right longest match against a morpheme lexicon, falling
// back to a single cluster.
class LongestMatchModel {
 public:
  explicit LongestMatchModel(std::set<std::string> lexicon);

  const std::set<std::string>& lexicon() const { return lexicon_; }
  SegmentedWord segment(std::string_view surface) const;

  friend bool operator==(const LongestMatchModel& a, const LongestMatchModel& b) { return a.lexicon_ == b.lexicon_; }

 private:
  std::set<std::string> lexicon_;
  std::size_t max_clusters_ = 0;
};

LongestMatchModel train_longest_match(const Corpus& corpus);

nlohmann::json to_json(const LongestMatchModel& m);
LongestMatchModel longest_match_from_json(const nlohmann::json& j);

}  // namespace morphsplit
