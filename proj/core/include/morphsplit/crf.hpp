#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/corpus.hpp"
#include "morphsplit/features.hpp"
#include "morphsplit/labels.hpp"
#include "morphsplit/optimizer.hpp"

namespace morphsplit {

// First-order linear-chain CRF over the six labels. Weight layout: emission
// weights w[f * 6 + y] for every feature id f, followed by 36 transition
// weights T[prev * 6 + cur]. A sequence score is the sum of emissions for
// each interior label plus T[START][y1], T[y(t-1)][y(t)] and T[yL][END].
// Features unseen in training contribute nothing.
class CrfModel {
 public:
  CrfModel(FeatureTemplate tmpl, FeatureIndex index, std::vector<double> weights, double l2_lambda);

  const FeatureTemplate& feature_template() const { return template_; }
  const FeatureIndex& feature_index() const { return index_; }
  const std::vector<double>& weights() const { return weights_; }
  double l2_lambda() const { return l2_lambda_; }
  std::size_t num_features() const { return index_.size(); }

  static std::size_t transition_offset(std::size_t num_features) { return num_features * kNumLabels; }
  double emission(std::size_t feature, Label y) const { return weights_[feature * kNumLabels + index_of(y)]; }
  double transition(Label prev, Label cur) const {
    return weights_[transition_offset(num_features()) + index_of(prev) * kNumLabels + index_of(cur)];
  }

  // Known feature ids at each cluster of `surface`.
  std::vector<std::vector<std::uint32_t>> compile(std::string_view surface) const;

  friend bool operator==(const CrfModel&, const CrfModel&) = default;

 private:
  FeatureTemplate template_;
  FeatureIndex index_;
  std::vector<double> weights_;
  double l2_lambda_ = 0.0;
};

nlohmann::json to_json(const CrfModel& m);
CrfModel crf_model_from_json(const nlohmann::json& j);

// Score of one interior labelling (|interior| = cluster count).
double crf_sequence_score(const CrfModel& model, std::string_view surface, std::span<const Label> interior);

// log sum over all 6^L interior labellings of exp(score).
double crf_log_partition(const CrfModel& model, std::string_view surface);

struct CrfGradient {
  double objective = 0.0;
  std::vector<double> gradient;
};

// Negative mean log-likelihood of the batch plus l2/2 * |w|^2, and its
// gradient. Throws ContractError on an empty batch.
CrfGradient crf_gradient(const CrfModel& model, std::span<const SegmentedWord> batch);

struct ViterbiResult {
  std::vector<Label> interior;  // unrepaired argmax
  double score = 0.0;
};

// Highest scoring interior labelling; among equal scores the
// lexicographically smallest in label index order.
ViterbiResult crf_viterbi(const CrfModel& model, std::string_view surface);

// crf_viterbi followed by the label repair rule; START + interior + END.
LabelSequence viterbi_decode(const CrfModel& model, std::string_view surface);

SegmentedWord crf_segment(const CrfModel& model, std::string_view surface);

// Builds the feature index from the training words and fits the weights
// from zero. Throws ContractError on an empty corpus and TrainingError when
// the objective diverges. `history`, when given, receives the accepted
// objective values.
CrfModel train_crf(const Corpus& corpus, const FeatureTemplate& tmpl, const TrainConfig& config,
                   std::vector<double>* history = nullptr);

}  // namespace morphsplit
