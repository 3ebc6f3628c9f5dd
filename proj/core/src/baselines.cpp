#include "morphsplit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "morphsplit/error.hpp"
#include "morphsplit/unicode.hpp"

namespace morphsplit {

namespace {

std::string join(std::span<const std::string> clusters, std::size_t from, std::size_t to) {
  std::string s;
  for (std::size_t k = from; k < to; ++k) s += clusters[k];
  return s;
}

void require_words(const Corpus& corpus, const char* what) {
  if (corpus.empty()) throw ContractError(std::string("cannot train ") + what + " on an empty corpus");
}

}  // namespace

// ---- unigram ----

UnigramModel::UnigramModel(Counts counts, double smoothing) : counts_(std::move(counts)), smoothing_(smoothing) {
  if (!(smoothing_ > 0.0) || !std::isfinite(smoothing_)) throw ContractError("unigram smoothing must be > 0");
  for (const auto& [m, c] : counts_) total_ += c;
  const double v = static_cast<double>(counts_.size());
  log_denominator_ = std::log(static_cast<double>(total_) + smoothing_ * (v + 1.0));
}

double UnigramModel::log_probability(std::string_view morpheme) const {
  auto it = counts_.find(morpheme);
  const double c = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log(c + smoothing_) - log_denominator_;
}

SegmentedWord UnigramModel::segment(std::string_view surface) const {
  const auto clusters = graphemes(surface);
  const std::size_t n = clusters.size();
  if (n == 0) throw ContractError("cannot segment an empty surface");
  struct Cell {
    double score = -std::numeric_limits<double>::infinity();
    std::size_t pieces = 0;
    std::size_t back = 0;
  };
  std::vector<Cell> best(n + 1);
  best[0].score = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    // i ascending: the first maximiser has the longest final morpheme.
    for (std::size_t i = 0; i < j; ++i) {
      const double s = best[i].score + log_probability(join(clusters, i, j));
      const std::size_t pieces = best[i].pieces + 1;
      if (s > best[j].score || (s == best[j].score && pieces < best[j].pieces)) {
        best[j] = {s, pieces, i};
      }
    }
  }
  std::vector<std::size_t> cuts;
  for (std::size_t j = best[n].back; j > 0; j = best[j].back) cuts.push_back(j);
  std::reverse(cuts.begin(), cuts.end());
  return SegmentedWord::from_boundaries(surface, cuts);
}

UnigramModel train_unigram_viterbi(const Corpus& corpus, double smoothing) {
  require_words(corpus, "a unigram model");
  UnigramModel::Counts counts;
  for (const auto& w : corpus.words()) {
    for (const auto& m : w.morphemes()) ++counts[m];
  }
  return UnigramModel(std::move(counts), smoothing);
}

nlohmann::json to_json(const UnigramModel& m) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [k, v] : m.counts()) counts[k] = v;
  return {{"smoothing", m.smoothing()}, {"counts", counts}};
}

UnigramModel unigram_model_from_json(const nlohmann::json& j) {
  UnigramModel::Counts counts;
  for (const auto& [k, v] : j.at("counts").items()) counts[k] = v.get<std::size_t>();
  return UnigramModel(std::move(counts), j.at("smoothing").get<double>());
}

// ---- boundary logistic ----

std::vector<std::vector<std::string>> gap_features(std::span<const std::string> clusters, const FeatureTemplate& tmpl) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t g = 0; g + 1 < clusters.size(); ++g) {
    std::vector<std::string> f;
    for (const auto& name : extract_features(clusters, g, tmpl)) f.push_back("L|" + name);
    for (const auto& name : extract_features(clusters, g + 1, tmpl)) f.push_back("R|" + name);
    std::sort(f.begin(), f.end());
    out.push_back(std::move(f));
  }
  return out;
}

BoundaryLogisticModel::BoundaryLogisticModel(FeatureTemplate tmpl, FeatureIndex index, std::vector<double> weights,
                                             double l2_lambda)
    : template_(tmpl), index_(std::move(index)), weights_(std::move(weights)), l2_lambda_(l2_lambda) {
  template_.validate();
  if (weights_.size() != index_.size() + 1) throw ContractError("logistic weight vector has the wrong length");
  for (double w : weights_) {
    if (!std::isfinite(w)) throw ContractError("logistic weights must be finite");
  }
}

std::vector<std::vector<std::uint32_t>> BoundaryLogisticModel::compile(std::string_view surface) const {
  const auto clusters = graphemes(surface);
  std::vector<std::vector<std::uint32_t>> out;
  for (const auto& names : gap_features(clusters, template_)) {
    std::vector<std::uint32_t> ids;
    for (const auto& n : names) {
      if (auto id = index_.find(n)) ids.push_back(*id);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double gap_logit(std::span<const double> w, std::span<const std::uint32_t> ids) {
  double z = w[0];
  for (auto f : ids) z += w[1 + f];
  return z;
}

struct GapSample {
  std::vector<std::uint32_t> ids;
  bool boundary;
};

double logistic_objective(std::span<const double> w, std::span<const GapSample> samples, double l2,
                          std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  if (!samples.empty()) {
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
      const double z = gap_logit(w, s.ids);
      // -log p(y|z) = softplus(z) - y z
      loss += softplus(z) - (s.boundary ? z : 0.0);
      const double r = inv * (sigmoid(z) - (s.boundary ? 1.0 : 0.0));
      grad[0] += r;
      for (auto f : s.ids) grad[1 + f] += r;
    }
    loss *= inv;
  }
  double norm2 = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    norm2 += w[i] * w[i];
    grad[i] += l2 * w[i];
  }
  return loss + 0.5 * l2 * norm2;
}

std::vector<GapSample> gap_samples(const BoundaryLogisticModel& model, std::span<const SegmentedWord> batch) {
  std::vector<GapSample> out;
  for (const auto& word : batch) {
    auto gaps = model.compile(word.surface());
    std::vector<bool> is_boundary(gaps.size(), false);
    for (auto b : word.boundaries()) is_boundary[b - 1] = true;
    for (std::size_t g = 0; g < gaps.size(); ++g) out.push_back({std::move(gaps[g]), is_boundary[g]});
  }
  return out;
}

}  // namespace

double BoundaryLogisticModel::boundary_probability(std::string_view surface, std::size_t gap) const {
  const auto gaps = compile(surface);
  if (gap >= gaps.size()) throw ContractError("gap index out of range");
  return sigmoid(gap_logit(weights_, gaps[gap]));
}

SegmentedWord BoundaryLogisticModel::segment(std::string_view surface) const {
  const auto gaps = compile(surface);
  std::vector<std::size_t> cuts;
  for (std::size_t g = 0; g < gaps.size(); ++g) {
    if (sigmoid(gap_logit(weights_, gaps[g])) > 0.5) cuts.push_back(g + 1);
  }
  return SegmentedWord::from_boundaries(surface, cuts);
}

LogisticGradient logistic_gradient(const BoundaryLogisticModel& model, std::span<const SegmentedWord> batch) {
  const auto samples = gap_samples(model, batch);
  LogisticGradient out;
  out.gradient.resize(model.weights().size());
  out.objective = logistic_objective(model.weights(), samples, model.l2_lambda(), out.gradient);
  return out;
}

BoundaryLogisticModel train_boundary_logistic(const Corpus& corpus, const FeatureTemplate& tmpl,
                                              const TrainConfig& config, std::vector<double>* history) {
  require_words(corpus, "a boundary classifier");
  tmpl.validate();
  config.validate();
  FeatureIndex index;
  for (const auto& word : corpus.words()) {
    for (const auto& names : gap_features(graphemes(word.surface()), tmpl)) {
      for (const auto& n : names) index.add(n);
    }
  }
  const std::size_t dim = index.size() + 1;
  BoundaryLogisticModel shell(tmpl, index, std::vector<double>(dim, 0.0), config.l2_lambda);
  const auto samples = gap_samples(shell, corpus.words());
  const double l2 = config.l2_lambda;
  OptimizeResult res;
  try {
    res = minimize(
        [&](std::span<const double> w, std::span<double> g) { return logistic_objective(w, samples, l2, g); },
        std::vector<double>(dim, 0.0), config);
  } catch (const TrainingError& e) {
    std::ostringstream msg;
    msg << "boundary classifier training failed on " << samples.size() << " gaps: " << e.what();
    throw TrainingError(msg.str());
  }
  if (history) *history = res.history;
  return BoundaryLogisticModel(tmpl, std::move(index), std::move(res.x), config.l2_lambda);
}

nlohmann::json to_json(const BoundaryLogisticModel& m) {
  return {{"template", to_json(m.feature_template())},
          {"features", m.feature_index().names()},
          {"weights", m.weights()},
          {"l2_lambda", m.l2_lambda()}};
}

BoundaryLogisticModel boundary_logistic_from_json(const nlohmann::json& j) {
  return BoundaryLogisticModel(feature_template_from_json(j.at("template")),
                               FeatureIndex::from_names(j.at("features").get<std::vector<std::string>>()),
                               j.at("weights").get<std::vector<double>>(), j.at("l2_lambda").get<double>());
}

// ---- longest match ----

LongestMatchModel::LongestMatchModel(std::set<std::string> lexicon) : lexicon_(std::move(lexicon)) {
  for (const auto& m : lexicon_) {
    if (m.empty()) throw ContractError("lexicon contains an empty morpheme");
    max_clusters_ = std::max(max_clusters_, grapheme_count(m));
  }
}

SegmentedWord LongestMatchModel::segment(std::string_view surface) const {
  const auto clusters = graphemes(surface);
  const std::size_t n = clusters.size();
  if (n == 0) throw ContractError("cannot segment an empty surface");
  std::vector<std::size_t> cuts;
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t step = 1;
    for (std::size_t len = std::min(max_clusters_, n - pos); len >= 1; --len) {
      if (lexicon_.count(join(clusters, pos, pos + len))) {
        step = len;
        break;
      }
    }
    pos += step;
    if (pos < n) cuts.push_back(pos);
  }
  return SegmentedWord::from_boundaries(surface, cuts);
}

LongestMatchModel train_longest_match(const Corpus& corpus) {
  require_words(corpus, "a longest-match lexicon");
  std::set<std::string> lex;
  for (const auto& w : corpus.words()) lex.insert(w.morphemes().begin(), w.morphemes().end());
  return LongestMatchModel(std::move(lex));
}

nlohmann::json to_json(const LongestMatchModel& m) { return {{"lexicon", m.lexicon()}}; }

LongestMatchModel longest_match_from_json(const nlohmann::json& j) {
  return LongestMatchModel(j.at("lexicon").get<std::set<std::string>>());
}

}  // namespace morphsplit
