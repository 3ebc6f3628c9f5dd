#include "morphsplit/crf.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "morphsplit/error.hpp"
#include "morphsplit/unicode.hpp"

namespace morphsplit {

namespace {

constexpr std::size_t L6 = kNumLabels;
constexpr std::size_t kStartIdx = index_of(Label::kStart);
constexpr std::size_t kEndIdx = index_of(Label::kEnd);

using Row = std::array<double, L6>;
using FeatureIds = std::vector<std::vector<std::uint32_t>>;

struct CompiledWord {
  FeatureIds feats;
  std::vector<std::size_t> gold;  // interior label indices
};

double log_sum_exp(const Row& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<Row> emissions(std::span<const double> w, const FeatureIds& feats) {
  std::vector<Row> e(feats.size());
  for (std::size_t t = 0; t < feats.size(); ++t) {
    e[t].fill(0.0);
    for (auto f : feats[t]) {
      for (std::size_t y = 0; y < L6; ++y) e[t][y] += w[f * L6 + y];
    }
  }
  return e;
}

// Transition matrix view into the tail of the weight vector.
struct Trans {
  std::span<const double> t;
  double operator()(std::size_t p, std::size_t c) const { return t[p * L6 + c]; }
};

Trans transitions(std::span<const double> w) { return Trans{w.subspan(w.size() - L6 * L6)}; }

struct Lattice {
  std::vector<Row> alpha, beta;
  double log_z = 0.0;
};

Lattice forward_backward(const std::vector<Row>& e, const Trans& tr, bool with_beta) {
  const std::size_t n = e.size();
  Lattice lat;
  lat.alpha.resize(n);
  for (std::size_t y = 0; y < L6; ++y) lat.alpha[0][y] = tr(kStartIdx, y) + e[0][y];
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t c = 0; c < L6; ++c) {
      Row terms;
      for (std::size_t p = 0; p < L6; ++p) terms[p] = lat.alpha[t - 1][p] + tr(p, c);
      lat.alpha[t][c] = log_sum_exp(terms) + e[t][c];
    }
  }
  Row last;
  for (std::size_t y = 0; y < L6; ++y) last[y] = lat.alpha[n - 1][y] + tr(y, kEndIdx);
  lat.log_z = log_sum_exp(last);
  if (!with_beta) return lat;

  lat.beta.resize(n);
  for (std::size_t y = 0; y < L6; ++y) lat.beta[n - 1][y] = tr(y, kEndIdx);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t p = 0; p < L6; ++p) {
      Row terms;
      for (std::size_t c = 0; c < L6; ++c) terms[c] = tr(p, c) + e[t + 1][c] + lat.beta[t + 1][c];
      lat.beta[t][p] = log_sum_exp(terms);
    }
  }
  return lat;
}

double gold_score(const std::vector<Row>& e, const Trans& tr, std::span<const std::size_t> gold) {
  double s = tr(kStartIdx, gold[0]) + tr(gold.back(), kEndIdx);
  for (std::size_t t = 0; t < gold.size(); ++t) {
    s += e[t][gold[t]];
    if (t > 0) s += tr(gold[t - 1], gold[t]);
  }
  return s;
}

// Mean negative log-likelihood + l2/2 |w|^2; gradient written into `grad`.
double objective(std::span<const double> w, std::span<const CompiledWord> batch, double l2, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t toff = w.size() - L6 * L6;
  const Trans tr = transitions(w);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;

  for (const auto& word : batch) {
    const auto e = emissions(w, word.feats);
    const auto lat = forward_backward(e, tr, true);
    total += lat.log_z - gold_score(e, tr, word.gold);
    const std::size_t n = e.size();

    for (std::size_t t = 0; t < n; ++t) {
      Row marg;
      for (std::size_t y = 0; y < L6; ++y) marg[y] = std::exp(lat.alpha[t][y] + lat.beta[t][y] - lat.log_z);
      marg[word.gold[t]] -= 1.0;
      for (auto f : word.feats[t]) {
        for (std::size_t y = 0; y < L6; ++y) grad[f * L6 + y] += inv * marg[y];
      }
      if (t == 0) {
        for (std::size_t y = 0; y < L6; ++y) grad[toff + kStartIdx * L6 + y] += inv * marg[y];
      }
      if (t == n - 1) {
        for (std::size_t y = 0; y < L6; ++y) grad[toff + y * L6 + kEndIdx] += inv * marg[y];
      }
      if (t > 0) {
        for (std::size_t p = 0; p < L6; ++p) {
          for (std::size_t c = 0; c < L6; ++c) {
            const double pm = std::exp(lat.alpha[t - 1][p] + tr(p, c) + e[t][c] + lat.beta[t][c] - lat.log_z);
            grad[toff + p * L6 + c] += inv * pm;
          }
        }
        grad[toff + word.gold[t - 1] * L6 + word.gold[t]] -= inv;
      }
    }
  }

  double norm2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    norm2 += w[i] * w[i];
    grad[i] += l2 * w[i];
  }
  return total * inv + 0.5 * l2 * norm2;
}

CompiledWord compile_word(const CrfModel& model, const SegmentedWord& word) {
  CompiledWord cw;
  cw.feats = model.compile(word.surface());
  const auto labels = encode_labels(word);
  for (std::size_t t = 1; t + 1 < labels.size(); ++t) cw.gold.push_back(index_of(labels[t]));
  return cw;
}

void check_finite(const std::vector<double>& w) {
  for (double x : w) {
    if (!std::isfinite(x)) throw ContractError("CRF weights must be finite");
  }
}

}  // namespace

CrfModel::CrfModel(FeatureTemplate tmpl, FeatureIndex index, std::vector<double> weights, double l2_lambda)
    : template_(tmpl), index_(std::move(index)), weights_(std::move(weights)), l2_lambda_(l2_lambda) {
  template_.validate();
  if (weights_.size() != index_.size() * L6 + L6 * L6) {
    throw ContractError("CRF weight vector has " + std::to_string(weights_.size()) + " entries, expected " +
                        std::to_string(index_.size() * L6 + L6 * L6));
  }
  check_finite(weights_);
}

FeatureIds CrfModel::compile(std::string_view surface) const {
  const auto clusters = graphemes(surface);
  FeatureIds out(clusters.size());
  for (std::size_t t = 0; t < clusters.size(); ++t) {
    for (const auto& name : extract_features(clusters, t, template_)) {
      if (auto id = index_.find(name)) out[t].push_back(*id);
    }
  }
  return out;
}

nlohmann::json to_json(const CrfModel& m) {
  return {{"template", to_json(m.feature_template())},
          {"features", m.feature_index().names()},
          {"weights", m.weights()},
          {"l2_lambda", m.l2_lambda()}};
}

CrfModel crf_model_from_json(const nlohmann::json& j) {
  return CrfModel(feature_template_from_json(j.at("template")),
                  FeatureIndex::from_names(j.at("features").get<std::vector<std::string>>()),
                  j.at("weights").get<std::vector<double>>(), j.at("l2_lambda").get<double>());
}

double crf_sequence_score(const CrfModel& model, std::string_view surface, std::span<const Label> interior) {
  const auto feats = model.compile(surface);
  if (interior.size() != feats.size() || feats.empty()) {
    throw ContractError("label count does not match word length");
  }
  std::vector<std::size_t> idx;
  for (Label l : interior) idx.push_back(index_of(l));
  return gold_score(emissions(model.weights(), feats), transitions(model.weights()), idx);
}

double crf_log_partition(const CrfModel& model, std::string_view surface) {
  const auto feats = model.compile(surface);
  if (feats.empty()) throw ContractError("empty surface");
  return forward_backward(emissions(model.weights(), feats), transitions(model.weights()), false).log_z;
}

CrfGradient crf_gradient(const CrfModel& model, std::span<const SegmentedWord> batch) {
  if (batch.empty()) throw ContractError("gradient batch is empty");
  std::vector<CompiledWord> compiled;
  compiled.reserve(batch.size());
  for (const auto& w : batch) compiled.push_back(compile_word(model, w));
  CrfGradient out;
  out.gradient.resize(model.weights().size());
  out.objective = objective(model.weights(), compiled, model.l2_lambda(), out.gradient);
  return out;
}

ViterbiResult crf_viterbi(const CrfModel& model, std::string_view surface) {
  const auto feats = model.compile(surface);
  if (feats.empty()) throw ContractError("empty surface");
  const auto e = emissions(model.weights(), feats);
  const Trans tr = transitions(model.weights());
  const std::size_t n = e.size();

  // best[t][y]: best score of labels t..n-1 plus END given y(t) = y.
  std::vector<Row> best(n);
  for (std::size_t y = 0; y < L6; ++y) best[n - 1][y] = e[n - 1][y] + tr(y, kEndIdx);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t y = 0; y < L6; ++y) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < L6; ++c) m = std::max(m, tr(y, c) + best[t + 1][c]);
      best[t][y] = e[t][y] + m;
    }
  }
  // Forward pass picking the lowest index among maximisers yields the
  // lexicographically first optimal sequence.
  ViterbiResult r;
  std::size_t prev = kStartIdx;
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t arg = 0;
    double m = tr(prev, 0) + best[t][0];
    for (std::size_t y = 1; y < L6; ++y) {
      const double v = tr(prev, y) + best[t][y];
      if (v > m) {
        m = v;
        arg = y;
      }
    }
    if (t == 0) r.score = m;
    r.interior.push_back(label_at(arg));
    prev = arg;
  }
  return r;
}

LabelSequence viterbi_decode(const CrfModel& model, std::string_view surface) {
  const auto v = crf_viterbi(model, surface);
  LabelSequence full;
  full.reserve(v.interior.size() + 2);
  full.push_back(Label::kStart);
  full.insert(full.end(), v.interior.begin(), v.interior.end());
  full.push_back(Label::kEnd);
  return repair_labels(surface, full);
}

SegmentedWord crf_segment(const CrfModel& model, std::string_view surface) {
  return decode_labels(surface, viterbi_decode(model, surface));
}

CrfModel train_crf(const Corpus& corpus, const FeatureTemplate& tmpl, const TrainConfig& config,
                   std::vector<double>* history) {
  if (corpus.empty()) throw ContractError("cannot train a CRF on an empty corpus");
  tmpl.validate();
  config.validate();

  FeatureIndex index;
  for (const auto& word : corpus.words()) {
    const auto clusters = graphemes(word.surface());
    for (std::size_t t = 0; t < clusters.size(); ++t) {
      for (const auto& name : extract_features(clusters, t, tmpl)) index.add(name);
    }
  }
  const std::size_t dim = index.size() * L6 + L6 * L6;
  CrfModel shell(tmpl, index, std::vector<double>(dim, 0.0), config.l2_lambda);
  std::vector<CompiledWord> compiled;
  compiled.reserve(corpus.size());
  for (const auto& w : corpus.words()) compiled.push_back(compile_word(shell, w));

  const double l2 = config.l2_lambda;
  OptimizeResult res;
  try {
    res = minimize([&](std::span<const double> w, std::span<double> g) { return objective(w, compiled, l2, g); },
                   std::vector<double>(dim, 0.0), config);
  } catch (const TrainingError& e) {
    std::ostringstream msg;
    msg << "CRF training failed on " << corpus.size() << " words with " << index.size()
        << " features: " << e.what();
    throw TrainingError(msg.str());
  }
  if (history) *history = res.history;
  return CrfModel(tmpl, std::move(index), std::move(res.x), config.l2_lambda);
}

}  // namespace morphsplit
