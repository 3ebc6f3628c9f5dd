// Acceptance suite: one PASS/FAIL line per criterion. Run without
// arguments for all criteria, or pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../unit/crf_oracle.hpp"
#include "../unit/ols_oracle.hpp"
#include "../unit/split_oracle.hpp"
#include "morphsplit/baselines.hpp"
#include "morphsplit/crf.hpp"
#include "morphsplit/error.hpp"
#include "morphsplit/grid.hpp"
#include "morphsplit/labels.hpp"
#include "morphsplit/runner.hpp"
#include "morphsplit/splitter.hpp"
#include "morphsplit/stats.hpp"
#include "morphsplit/synthetic.hpp"
#include "morphsplit/unicode.hpp"

namespace morphsplit {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

#include "../unit/student_t_reference.inc"

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("morphsplit-acceptance-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> report_files(const fs::path& out) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(out / "reports")) files[e.path().filename().string()] = slurp(e.path());
  return files;
}

// 1. Forward log-partition and Viterbi against exhaustive enumeration.
Outcome crf_oracle_suite() {
  const auto start = Clock::now();
  Rng rng(101);
  double worst_rel = 0.0;
  int exact = 0, path_match = 0;
  double worst_lib_score = 0.0;
  constexpr int kPairs = 100;
  for (int i = 0; i < kPairs; ++i) {
    const std::string word = testing::random_word(rng, 1 + rng.below(6));
    const CrfModel m = testing::random_crf({word, testing::random_word(rng, 4)}, rng, 1.0 + rng.uniform(0, 2), 0.1);
    const auto e = testing::enumerate(m, word);
    const double lz = crf_log_partition(m, word);
    worst_rel = std::max(worst_rel, std::abs(lz - e.log_z) / std::max(1.0, std::abs(e.log_z)));
    const auto v = crf_viterbi(m, word);
    std::vector<std::size_t> path;
    for (Label l : v.interior) path.push_back(index_of(l));
    // The decoded path scored by the oracle equals the enumerated maximum
    // bit for bit.
    if (testing::oracle_score(m, testing::oracle_features(m, word), path) == e.max_score) ++exact;
    if (path == e.argmax) ++path_match;
    worst_lib_score = std::max(worst_lib_score, std::abs(v.score - e.max_score));
  }
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = worst_rel <= 1e-9 && exact == kPairs && path_match == kPairs && secs < 10.0;
  o.detail = "max rel logZ error " + fmt("%.2e", worst_rel) + ", exact Viterbi maxima " + std::to_string(exact) +
             "/100, argmax paths " + std::to_string(path_match) + "/100, reported-score drift " +
             fmt("%.1e", worst_lib_score) + ", " + fmt("%.2f", secs) + " s";
  return o;
}

// 2. Analytic gradients against central finite differences, h = 1e-5.
Outcome gradient_checks() {
  const auto start = Clock::now();
  Rng rng(202);
  double worst_crf = 0.0, worst_log = 0.0;
  for (int b = 0; b < 10; ++b) {
    std::vector<SegmentedWord> batch;
    std::vector<std::string> words;
    for (int k = 0; k < 3; ++k) {
      words.push_back(testing::random_word(rng, 2 + rng.below(5)));
      batch.push_back(testing::random_segmentation(rng, words.back()));
    }
    const CrfModel crf = testing::random_crf(words, rng, 0.5, 0.1);
    const auto g = crf_gradient(crf, batch);
    worst_crf = std::max(worst_crf, testing::max_fd_error(
                                        [&](const std::vector<double>& w) {
                                          return crf_gradient(testing::with_weights(crf, w), batch).objective;
                                        },
                                        crf.weights(), g.gradient, 1e-5));

    FeatureIndex idx;
    for (const auto& w : words) {
      for (const auto& gap : gap_features(graphemes(w), FeatureTemplate{})) {
        for (const auto& f : gap) idx.add(f);
      }
    }
    std::vector<double> weights(idx.size() + 1);
    for (double& x : weights) x = rng.uniform(-1, 1);
    const BoundaryLogisticModel lm(FeatureTemplate{}, idx, weights, 0.2);
    const auto lg = logistic_gradient(lm, batch);
    worst_log = std::max(worst_log, testing::max_fd_error(
                                        [&](const std::vector<double>& w) {
                                          return logistic_gradient(BoundaryLogisticModel(FeatureTemplate{}, idx, w, 0.2),
                                                                   batch)
                                              .objective;
                                        },
                                        weights, lg.gradient, 1e-5));
  }
  const double secs = seconds_since(start);
  return {worst_crf < 1e-4 && worst_log < 1e-4 && secs < 30.0,
          "max rel error CRF " + fmt("%.2e", worst_crf) + ", boundary logistic " + fmt("%.2e", worst_log) +
              " over 10 batches each, " + fmt("%.2f", secs) + " s"};
}

// 3. Hill climbing against exhaustive search on corpora of <= 12 words.
Outcome adversarial_optimality() {
  const auto start = Clock::now();
  Rng rng(303);
  int optimal = 0, below_random = 0;
  double worst_gap = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 6 + rng.below(7);
    const Corpus c = generate_synthetic_corpus({.stem_count = 3 + rng.below(4),
                                                .suffix_count = 3 + rng.below(3),
                                                .max_suffixes = 2,
                                                .word_count = n,
                                                .seed = rng.next()});
    const SplitRatio ratio = t % 2 ? SplitRatio(1, 1) : SplitRatio(2, 1);
    const std::uint64_t seed = rng.next();
    const auto adv = adversarial_split(c, ratio, seed, kUnlimitedBudget);
    const auto rnd = random_split(c, ratio, seed);
    const double best = testing::exhaustive_max_tv(c, adv.indices_b.size());
    if (adv.achieved_distance >= best - 1e-9) ++optimal;
    worst_gap = std::max(worst_gap, best - adv.achieved_distance);
    if (adv.achieved_distance < rnd.achieved_distance) ++below_random;
  }
  const double secs = seconds_since(start);
  return {optimal >= 90 && below_random == 0 && secs < 60.0,
          std::to_string(optimal) + "/100 at the exhaustive optimum (largest shortfall " + fmt("%.3f", worst_gap) +
              "), " + std::to_string(below_random) + " below the seed-matched random split, " + fmt("%.2f", secs) +
              " s"};
}

// 4. Default grid on a 400-word corpus.
Outcome grid_cardinality() {
  const auto start = Clock::now();
  const Corpus corpus = generate_synthetic_corpus({.stem_count = 40, .suffix_count = 8, .word_count = 400, .seed = 4});
  const ExperimentPlan plan;
  bool ok = true;
  std::string detail;
  for (Strategy s : {Strategy::kRandom, Strategy::kAdversarial}) {
    const auto cells = build_grid(corpus, plan, s);
    std::map<std::size_t, std::size_t> per_fraction;
    std::size_t bad = 0;
    std::set<std::string> ids;
    for (const auto& cell : cells) {
      ++per_fraction[cell.fraction_index];
      ids.insert(cell.cell_id);
      std::vector<int> seen(corpus.size(), 0);
      for (const auto* side : {&cell.train, &cell.eval, &cell.new_test}) {
        if (side->empty()) ++bad;
        for (std::size_t i : *side) {
          if (i < seen.size()) ++seen[i];
        }
      }
      if (std::any_of(seen.begin(), seen.end(), [](int k) { return k != 1; })) ++bad;
    }
    bool strata = per_fraction.size() == 5;
    for (const auto& [f, k] : per_fraction) strata &= k == 30;
    ok &= cells.size() == 150 && ids.size() == 150 && strata && bad == 0;
    detail += std::string(to_string(s)) + ": " + std::to_string(cells.size()) + " cells, " +
              (strata ? "30" : "uneven") + " per fraction, " + std::to_string(bad) + " bad partitions; ";
  }
  return {ok, detail + fmt("%.2f", seconds_since(start)) + " s"};
}

// 5. Direction of the random-vs-adversarial findings on synthetic data.
Outcome qualitative_replication() {
  const auto start = Clock::now();
  const fs::path dir = scratch_dir("c5");
  constexpr int kSeeds = 5;
  std::vector<CellResult> all;
  for (int s = 0; s < kSeeds; ++s) {
    const Corpus corpus = generate_synthetic_corpus({.stem_count = 30,
                                                     .suffix_count = 8,
                                                     .min_suffixes = 1,
                                                     .max_suffixes = 3,
                                                     .word_count = 500,
                                                     .seed = static_cast<std::uint64_t>(1000 + s),
                                                     .language_tag = "agg"});
    const fs::path corpus_path = dir / ("agg" + std::to_string(s) + ".tsv");
    write_corpus(corpus_path, corpus);
    RunConfig c;
    c.corpora = {{"agg", corpus_path}};
    c.plan.master_seed = static_cast<std::uint64_t>(s);
    c.model_settings.train.max_iterations = 100;
    c.output_dir = dir / ("run" + std::to_string(s));
    const RunLedger ledger = run_experiment(c);
    if (!ledger.all_done()) return {false, "cells failed in seed " + std::to_string(s)};
    const auto cells = load_done_cells(c.output_dir / kLedgerFile);
    all.insert(all.end(), cells.begin(), cells.end());
  }
  fs::remove_all(dir);

  std::map<Strategy, std::vector<CellResult>> by;
  for (const auto& c : all) by[c.residual_strategy].push_back(c);
  const auto& rnd = by[Strategy::kRandom];
  const auto& adv = by[Strategy::kAdversarial];
  const auto gap_r = generalization_gap(rnd), gap_a = generalization_gap(adv);
  auto mean_new = [](const std::vector<CellResult>& cells, const std::string& m) {
    double sum = 0.0;
    for (const auto& c : cells) sum += c.models.at(m).new_f1(c.variant);
    return sum / static_cast<double>(cells.size());
  };
  const bool a = gap_a.at("crf").mean_abs > gap_r.at("crf").mean_abs;
  int models_ok = 0;
  std::string per_model;
  for (const auto& id : builtin_segmenters()) {
    const std::string m = id.name();
    const double r = mean_new(rnd, m), d = mean_new(adv, m);
    models_ok += r >= d;
    per_model += " " + m + " " + fmt("%.4f", r) + "/" + fmt("%.4f", d);
  }
  const bool b = models_ok >= 3;
  const double cons_r = ranking_consistency(rnd), cons_a = ranking_consistency(adv);
  const bool cc = cons_r >= cons_a;
  const double secs = seconds_since(start);
  return {a && b && cc && secs < 900.0,
          std::string("(a) CRF mean |gap| adversarial ") + fmt("%.4f", gap_a.at("crf").mean_abs) + " vs random " +
              fmt("%.4f", gap_r.at("crf").mean_abs) + (a ? " ok" : " WRONG DIRECTION") +
              "; (b) new-test F1 random/adversarial:" + per_model + " -> " + std::to_string(models_ok) + "/4" +
              (b ? " ok" : " WRONG DIRECTION") + "; (c) consistency random " + fmt("%.3f", cons_r) +
              " vs adversarial " + fmt("%.3f", cons_a) + (cc ? " ok" : " WRONG DIRECTION") + "; " +
              std::to_string(all.size()) + " cells over " + std::to_string(kSeeds) + " seeds, " +
              fmt("%.1f", secs) + " s"};
}

// 6. Regression engine, significance stars, Student-t.
Outcome regression_engine() {
  const auto start = Clock::now();
  Rng rng(606);
  const std::vector<std::string> archs = {"crf", "longest_match", "boundary_logistic", "unigram_viterbi"};
  std::vector<RegressionRecord> records;
  for (int i = 0; i < 200; ++i) {
    RegressionRecord r;
    r.random_strategy = rng.below(2) == 1;
    r.random_new_test = rng.below(2) == 1;
    r.morpheme_overlap = rng.uniform(0.6, 1.0);
    r.word_count_ratio = rng.uniform(6, 12);
    r.morph_per_word_ratio = rng.uniform(0.8, 1.25);
    r.morph_type_per_word_ratio = rng.uniform(0.8, 1.25);
    r.model_arch = archs[rng.below(archs.size())];
    r.f1 = 0.0;
    records.push_back(r);
  }
  DesignMatrix design = build_design_matrix(records);
  std::vector<double> truth(design.cols());
  for (double& b : truth) b = rng.uniform(-0.5, 0.5);
  for (std::size_t i = 0; i < design.rows; ++i) {
    double y = 1e-4 * rng.uniform(-1, 1);
    for (std::size_t j = 0; j < design.cols(); ++j) y += design.at(i, j) * truth[j];
    design.y[i] = y;
  }
  const auto fit = ols_fit(design);
  const auto oracle = testing::normal_equations(design);
  double worst_beta = 0.0, worst_p = 0.0, worst_truth = 0.0;
  for (std::size_t j = 0; j < design.cols(); ++j) {
    worst_beta = std::max(worst_beta, std::abs(fit.beta[j] - oracle.beta[j]));
    worst_p = std::max(worst_p, std::abs(fit.p[j] - oracle.p[j]));
    worst_truth = std::max(worst_truth, std::abs(fit.beta[j] - truth[j]));
  }

  const std::vector<std::pair<double, std::string>> stars = {
      {0.0, "***"},    {0.0001, "***"}, {0.000999, "***"}, {0.001, "**"}, {0.0010001, "**"},
      {0.005, "**"},   {0.009999, "**"}, {0.01, "*"},       {0.0100001, "*"}, {0.02, "*"},
      {0.04999, "*"},  {0.05, ""},       {0.0500001, ""},   {0.1, ""},      {0.5, ""},
      {0.99, ""},      {1.0, ""},        {0.00099999, "***"}, {0.03, "*"},  {0.0005, "***"}};
  int star_ok = 0;
  for (const auto& [p, s] : stars) star_ok += significance_stars(p) == s;

  double worst_t = 0.0;
  for (const auto& row : kStudentTReference) worst_t = std::max(worst_t, std::abs(student_t_cdf(row[1], row[0]) - row[2]));
  const double secs = seconds_since(start);
  return {worst_beta <= 1e-6 && worst_p <= 1e-6 && star_ok == 20 && worst_t <= 1e-8,
          "200 rows x " + std::to_string(design.cols()) + " terms: max |beta - oracle| " + fmt("%.1e", worst_beta) +
              ", max |p - oracle| " + fmt("%.1e", worst_p) + ", max |beta - generating| " + fmt("%.1e", worst_truth) +
              "; stars " + std::to_string(star_ok) + "/20; Student-t max error " + fmt("%.1e", worst_t) + " over " +
              std::to_string(std::size(kStudentTReference)) + " reference values; " + fmt("%.2f", secs) + " s"};
}

// 7. Determinism across reruns and parallelism.
Outcome determinism() {
  const auto start = Clock::now();
  const fs::path dir = scratch_dir("c7");
  const Corpus corpus = generate_synthetic_corpus({.stem_count = 15, .suffix_count = 6, .word_count = 120, .seed = 7});
  write_corpus(dir / "syn.tsv", corpus);
  RunConfig c;
  c.corpora = {{"syn", dir / "syn.tsv"}};
  c.plan.new_test_fractions = {{2, 10}, {4, 10}};
  c.plan.samples_per_fraction = 2;
  c.plan.residual_splits_per_strategy = 2;
  c.new_test_generations = {Strategy::kRandom, Strategy::kAdversarial};
  c.plan.adversarial_budget = 5000;
  c.model_settings.train.max_iterations = 50;
  c.plan.master_seed = 77;
  std::vector<std::map<std::string, std::string>> outputs;
  for (const auto& [name, workers] : {std::pair{"first", 1}, std::pair{"second", 1}, std::pair{"parallel", 8}}) {
    c.output_dir = dir / name;
    c.parallelism = static_cast<std::size_t>(workers);
    if (!run_experiment(c).all_done()) return {false, std::string("cells failed in run ") + name};
    outputs.push_back(report_files(c.output_dir));
  }
  fs::remove_all(dir);
  const double secs = seconds_since(start);
  const bool same_rerun = outputs[0] == outputs[1];
  const bool same_parallel = outputs[0] == outputs[2];
  return {same_rerun && same_parallel && !outputs[0].empty() && secs < 60.0,
          std::to_string(outputs[0].size()) + " report CSVs; rerun " + (same_rerun ? "identical" : "DIFFERENT") +
              ", parallelism 1 vs 8 " + (same_parallel ? "identical" : "DIFFERENT") + "; three runs in " +
              fmt("%.2f", secs) + " s"};
}

// 8. Label round trip and total repair.
Outcome labels_round_trip() {
  const auto start = Clock::now();
  Rng rng(808);
  const std::vector<std::string> clusters = {"a", "b", "k", "o", "t", "\xC3\xA9", "e\xCC\x81", "\xE3\x81\x8B"};
  int round_trip = 0, repaired = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::string> morphemes;
    std::string surface;
    const std::size_t count = 1 + rng.below(4);
    for (std::size_t m = 0; m < count; ++m) {
      std::string morph;
      for (std::size_t k = 1 + rng.below(4); k > 0; --k) morph += clusters[rng.below(clusters.size())];
      morphemes.push_back(morph);
      surface += morph;
    }
    const SegmentedWord w(surface, morphemes);
    if (decode_labels(w.surface(), encode_labels(w)) == w) ++round_trip;
  }
  for (int i = 0; i < 10000; ++i) {
    std::string surface;
    for (std::size_t k = 1 + rng.below(10); k > 0; --k) surface += clusters[rng.below(clusters.size())];
    const std::size_t len = graphemes(surface).size();
    LabelSequence labels(len + 2);
    for (auto& l : labels) l = label_at(rng.below(kNumLabels));
    try {
      const SegmentedWord w = decode_labels(surface, labels);
      const LabelSequence fixed = repair_labels(surface, labels);
      if (w.surface() == surface && is_valid_label_sequence(fixed) && decode_labels(surface, fixed) == w) ++repaired;
    } catch (const std::exception&) {
    }
  }
  const double secs = seconds_since(start);
  return {round_trip == 10000 && repaired == 10000,
          "round trip " + std::to_string(round_trip) + "/10000, repair " + std::to_string(repaired) + "/10000, " +
              fmt("%.2f", secs) + " s"};
}

}  // namespace
}  // namespace morphsplit

int main(int argc, char** argv) {
  using morphsplit::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"CRF oracle suite", morphsplit::crf_oracle_suite},
      {"gradient checks", morphsplit::gradient_checks},
      {"adversarial-split optimality", morphsplit::adversarial_optimality},
      {"grid cardinality", morphsplit::grid_cardinality},
      {"qualitative replication", morphsplit::qualitative_replication},
      {"regression engine", morphsplit::regression_engine},
      {"determinism and parallelism", morphsplit::determinism},
      {"label round trip and repair", morphsplit::labels_round_trip},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int number = static_cast<int>(k + 1);
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s: %s: %s\n", number, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
