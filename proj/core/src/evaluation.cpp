#include "morphsplit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "morphsplit/error.hpp"

namespace morphsplit {

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  true_positive += o.true_positive;
  false_positive += o.false_positive;
  false_negative += o.false_negative;
  return *this;
}

ScoreTriple MatchCounts::score() const {
  const std::size_t predicted = true_positive + false_positive;
  const std::size_t expected = true_positive + false_negative;
  ScoreTriple s;
  s.precision = predicted == 0 ? (expected == 0 ? 1.0 : 0.0)
                               : static_cast<double>(true_positive) / static_cast<double>(predicted);
  s.recall = expected == 0 ? (predicted == 0 ? 1.0 : 0.0)
                           : static_cast<double>(true_positive) / static_cast<double>(expected);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::string_view to_string(F1Variant v) { return v == F1Variant::kBoundary ? "boundary" : "morpheme"; }
std::string_view to_string(F1Average a) { return a == F1Average::kMicro ? "micro" : "macro"; }

F1Variant parse_f1_variant(std::string_view text) {
  if (text == "boundary") return F1Variant::kBoundary;
  if (text == "morpheme") return F1Variant::kMorpheme;
  throw ConfigError("unknown F1 variant '" + std::string(text) + "'");
}

F1Average parse_f1_average(std::string_view text) {
  if (text == "micro") return F1Average::kMicro;
  if (text == "macro") return F1Average::kMacro;
  throw ConfigError("unknown F1 average '" + std::string(text) + "'");
}

namespace {

void require_same_surface(const SegmentedWord& gold, const SegmentedWord& pred) {
  if (gold.surface() != pred.surface()) {
    throw ContractError("cannot score '" + pred.surface() + "' against gold '" + gold.surface() + "'");
  }
}

template <typename T>
MatchCounts set_counts(const std::vector<T>& gold, const std::vector<T>& pred) {
  // Both sorted and unique.
  MatchCounts c;
  std::size_t i = 0, j = 0;
  while (i < gold.size() && j < pred.size()) {
    if (gold[i] < pred[j]) {
      ++c.false_negative;
      ++i;
    } else if (pred[j] < gold[i]) {
      ++c.false_positive;
      ++j;
    } else {
      ++c.true_positive;
      ++i;
      ++j;
    }
  }
  c.false_negative += gold.size() - i;
  c.false_positive += pred.size() - j;
  return c;
}

using Span = std::tuple<std::size_t, std::size_t, std::string>;

std::vector<Span> spans(const SegmentedWord& w) {
  std::vector<Span> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < w.morpheme_count(); ++i) {
    const std::size_t end = start + w.morpheme_lengths()[i];
    out.emplace_back(start, end, w.morphemes()[i]);
    start = end;
  }
  return out;  // ascending by start
}

}  // namespace

MatchCounts boundary_counts(const SegmentedWord& gold, const SegmentedWord& pred) {
  require_same_surface(gold, pred);
  return set_counts(gold.boundaries(), pred.boundaries());
}

ScoreTriple boundary_f1(const SegmentedWord& gold, const SegmentedWord& pred) {
  return boundary_counts(gold, pred).score();
}

MatchCounts morpheme_counts(const SegmentedWord& gold, const SegmentedWord& pred) {
  require_same_surface(gold, pred);
  return set_counts(spans(gold), spans(pred));
}

ScoreTriple morpheme_f1(const SegmentedWord& gold, const SegmentedWord& pred) {
  return morpheme_counts(gold, pred).score();
}

ScoreTriple corpus_f1(std::span<const SegmentedWord> gold, std::span<const SegmentedWord> pred, F1Variant variant,
                      F1Average average) {
  if (gold.size() != pred.size()) throw ContractError("gold and prediction counts differ");
  if (gold.empty()) throw ContractError("cannot score an empty word list");
  auto counts = [&](std::size_t i) {
    return variant == F1Variant::kBoundary ? boundary_counts(gold[i], pred[i]) : morpheme_counts(gold[i], pred[i]);
  };
  if (average == F1Average::kMicro) {
    MatchCounts total;
    for (std::size_t i = 0; i < gold.size(); ++i) total += counts(i);
    return total.score();
  }
  ScoreTriple sum;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto s = counts(i).score();
    sum.precision += s.precision;
    sum.recall += s.recall;
    sum.f1 += s.f1;
  }
  const double n = static_cast<double>(gold.size());
  return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

std::string ModelRanking::to_string() const {
  std::string out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g > 0) out += " > ";
    for (std::size_t i = 0; i < groups[g].size(); ++i) {
      if (i > 0) out += " = ";
      out += groups[g][i];
    }
  }
  return out;
}

ModelRanking rank_models(const std::map<std::string, double>& scores, double collapse_epsilon) {
  if (scores.size() < 2) throw ContractError("ranking needs at least two models");
  std::vector<std::pair<std::string, double>> items(scores.begin(), scores.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  ModelRanking r;
  r.collapse_epsilon = collapse_epsilon;
  for (std::size_t i = 0; i < items.size(); ++i) {
    r.order.push_back(items[i].first);
    if (i == 0 || !(items[i - 1].second - items[i].second < collapse_epsilon)) r.groups.emplace_back();
    r.groups.back().push_back(items[i].first);
  }
  return r;
}

bool same_ranking(const ModelRanking& a, const ModelRanking& b) {
  if (a.groups.size() != b.groups.size()) return false;
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    std::set<std::string> x(a.groups[g].begin(), a.groups[g].end());
    std::set<std::string> y(b.groups[g].begin(), b.groups[g].end());
    if (x != y) return false;
  }
  return true;
}

double morpheme_overlap(const Corpus& train, const Corpus& eval) {
  if (eval.empty()) throw DomainError("morpheme overlap of an empty eval set");
  std::set<std::string> seen;
  for (const auto& w : train.words()) seen.insert(w.morphemes().begin(), w.morphemes().end());
  std::set<std::string> types;
  for (const auto& w : eval.words()) types.insert(w.morphemes().begin(), w.morphemes().end());
  std::size_t shared = 0;
  for (const auto& m : types) shared += seen.count(m);
  return static_cast<double>(shared) / static_cast<double>(types.size());
}

nlohmann::json to_json(const ScoreTriple& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

namespace {

ScoreTriple triple_from_json(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

ModelRanking ranking_from_json(const nlohmann::json& j) {
  ModelRanking r;
  r.order = j.at("order").get<std::vector<std::string>>();
  r.groups = j.at("groups").get<std::vector<std::vector<std::string>>>();
  r.collapse_epsilon = j.at("collapse_epsilon").get<double>();
  return r;
}

}  // namespace

nlohmann::json to_json(const ModelRanking& r) {
  return {{"order", r.order}, {"groups", r.groups}, {"collapse_epsilon", r.collapse_epsilon}};
}

nlohmann::json to_json(const CellResult& c) {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [name, s] : c.models) {
    models[name] = {{"boundary_eval", to_json(s.boundary_eval)},
                    {"boundary_new", to_json(s.boundary_new)},
                    {"morpheme_eval", to_json(s.morpheme_eval)},
                    {"morpheme_new", to_json(s.morpheme_new)},
                    {"seeds", s.seeds}};
  }
  return {{"cell_id", c.cell_id},
          {"language_tag", c.language_tag},
          {"fraction_index", c.fraction_index},
          {"fraction", c.fraction},
          {"new_test_generation", to_string(c.new_test_generation)},
          {"residual_strategy", to_string(c.residual_strategy)},
          {"train_size", c.train_size},
          {"eval_size", c.eval_size},
          {"new_test_size", c.new_test_size},
          {"morpheme_overlap", c.morpheme_overlap},
          {"word_count_ratio", c.word_count_ratio},
          {"morph_per_word_ratio", c.morph_per_word_ratio},
          {"morph_type_per_word_ratio", c.morph_type_per_word_ratio},
          {"f1_variant", to_string(c.variant)},
          {"f1_average", to_string(c.average)},
          {"models", models},
          {"ranking_eval", to_json(c.ranking_eval)},
          {"ranking_new", to_json(c.ranking_new)}};
}

CellResult cell_result_from_json(const nlohmann::json& j) {
  CellResult c;
  c.cell_id = j.at("cell_id").get<std::string>();
  c.language_tag = j.at("language_tag").get<std::string>();
  c.fraction_index = j.at("fraction_index").get<std::size_t>();
  c.fraction = j.at("fraction").get<double>();
  c.new_test_generation = parse_strategy(j.at("new_test_generation").get<std::string>());
  c.residual_strategy = parse_strategy(j.at("residual_strategy").get<std::string>());
  c.train_size = j.at("train_size").get<std::size_t>();
  c.eval_size = j.at("eval_size").get<std::size_t>();
  c.new_test_size = j.at("new_test_size").get<std::size_t>();
  c.morpheme_overlap = j.at("morpheme_overlap").get<double>();
  c.word_count_ratio = j.at("word_count_ratio").get<double>();
  c.morph_per_word_ratio = j.at("morph_per_word_ratio").get<double>();
  c.morph_type_per_word_ratio = j.at("morph_type_per_word_ratio").get<double>();
  c.variant = parse_f1_variant(j.at("f1_variant").get<std::string>());
  c.average = parse_f1_average(j.at("f1_average").get<std::string>());
  for (const auto& [name, s] : j.at("models").items()) {
    c.models[name] = ModelScores{triple_from_json(s.at("boundary_eval")), triple_from_json(s.at("boundary_new")),
                                 triple_from_json(s.at("morpheme_eval")), triple_from_json(s.at("morpheme_new")),
                                 s.at("seeds").get<std::size_t>()};
  }
  c.ranking_eval = ranking_from_json(j.at("ranking_eval"));
  c.ranking_new = ranking_from_json(j.at("ranking_new"));
  return c;
}

void rank_cell(CellResult& cell, double collapse_epsilon) {
  std::map<std::string, double> eval, fresh;
  for (const auto& [name, s] : cell.models) {
    eval[name] = s.eval_f1(cell.variant);
    fresh[name] = s.new_f1(cell.variant);
  }
  cell.ranking_eval = rank_models(eval, collapse_epsilon);
  cell.ranking_new = rank_models(fresh, collapse_epsilon);
}

double ranking_consistency(std::span<const CellResult> results) {
  if (results.empty()) throw DomainError("ranking consistency of no cells");
  std::size_t same = 0;
  for (const auto& c : results) same += same_ranking(c.ranking_eval, c.ranking_new) ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(results.size());
}

std::map<std::string, GeneralizationGap> generalization_gap(std::span<const CellResult> results) {
  if (results.empty()) throw DomainError("generalization gap of no cells");
  std::map<std::string, GeneralizationGap> out;
  std::map<std::string, std::size_t> n;
  for (const auto& c : results) {
    for (const auto& [name, s] : c.models) {
      const double d = s.eval_f1(c.variant) - s.new_f1(c.variant);
      out[name].mean_signed += d;
      out[name].mean_abs += std::abs(d);
      ++n[name];
    }
  }
  for (auto& [name, g] : out) {
    g.mean_signed /= static_cast<double>(n[name]);
    g.mean_abs /= static_cast<double>(n[name]);
  }
  return out;
}

std::map<std::string, double> score_variability(std::span<const CellResult> results) {
  if (results.size() < 2) throw DomainError("variability needs at least two cells");
  std::map<std::string, std::vector<double>> values;
  for (const auto& c : results) {
    for (const auto& [name, s] : c.models) values[name].push_back(s.new_f1(c.variant));
  }
  std::map<std::string, double> out;
  for (const auto& [name, v] : values) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[name] = std::sqrt(ss / static_cast<double>(v.size()));
  }
  return out;
}

}  // namespace morphsplit
