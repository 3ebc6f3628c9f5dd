#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "morphsplit/error.hpp"
#include "morphsplit/evaluation.hpp"
#include "morphsplit/random.hpp"
#include "morphsplit/synthetic.hpp"

namespace morphsplit {
namespace {

SegmentedWord cut(const std::string& s, std::vector<std::size_t> b) { return SegmentedWord::from_boundaries(s, b); }

TEST(BoundaryF1, ExactMatch) {
  const SegmentedWord g("avocados", {"avocado", "s"});
  EXPECT_EQ(boundary_f1(g, g), (ScoreTriple{1, 1, 1}));
}

TEST(BoundaryF1, PartialRecall) {
  const auto s = boundary_f1(cut("abcdef", {3, 5}), cut("abcdef", {3}));
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 2.0 / 3.0);
}

TEST(BoundaryF1, NoBoundaryConventions) {
  EXPECT_EQ(boundary_f1(cut("abc", {}), cut("abc", {})), (ScoreTriple{1, 1, 1}));
  EXPECT_EQ(boundary_f1(cut("abc", {1}), cut("abc", {})), (ScoreTriple{0, 0, 0}));
  EXPECT_EQ(boundary_f1(cut("abc", {}), cut("abc", {2})), (ScoreTriple{0, 0, 0}));
}

TEST(BoundaryF1, SurfaceMismatch) {
  EXPECT_THROW(boundary_f1(cut("abc", {}), cut("abd", {})), ContractError);
  EXPECT_THROW(morpheme_f1(cut("abc", {}), cut("abd", {})), ContractError);
}

TEST(MorphemeF1, Examples) {
  EXPECT_EQ(morpheme_f1(cut("abc", {2}), cut("abc", {1})), (ScoreTriple{0, 0, 0}));
  const auto s = morpheme_f1(cut("abc", {1, 2}), cut("abc", {1}));
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.f1, 0.4);
}

TEST(MorphemeF1, SpansNotStrings) {
  // Same strings at different positions do not match.
  EXPECT_DOUBLE_EQ(morpheme_f1(cut("aa", {}), cut("aa", {1})).precision, 0.0);
  const auto s = morpheme_f1(cut("abab", {2}), cut("abab", {2}));
  EXPECT_EQ(s, (ScoreTriple{1, 1, 1}));
}

std::vector<std::size_t> random_cuts(Rng& rng, std::size_t len) {
  std::vector<std::size_t> b;
  for (std::size_t i = 1; i < len; ++i) {
    if (rng.below(2)) b.push_back(i);
  }
  return b;
}

TEST(F1Properties, SymmetryAndFixedPoint) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t len = 1 + rng.below(9);
    const std::string s(len, 'q');
    const auto g = cut(s, random_cuts(rng, len));
    const auto p = cut(s, random_cuts(rng, len));
    EXPECT_EQ(boundary_f1(g, p).precision, boundary_f1(p, g).recall);
    EXPECT_EQ(morpheme_f1(g, p).precision, morpheme_f1(p, g).recall);
    EXPECT_EQ(boundary_f1(g, g).f1, 1.0);
    EXPECT_EQ(morpheme_f1(g, g).f1, 1.0);
    const auto b = boundary_f1(g, p);
    EXPECT_GE(b.f1, 0.0);
    EXPECT_LE(b.f1, 1.0);
    if (b.precision + b.recall > 0) EXPECT_DOUBLE_EQ(b.f1, 2 * b.precision * b.recall / (b.precision + b.recall));
  }
}

TEST(CorpusF1, MicroAndMacro) {
  std::vector<SegmentedWord> gold = {cut("abcd", {1, 2, 3}), cut("xy", {})};
  std::vector<SegmentedWord> pred = {cut("abcd", {1}), cut("xy", {1})};
  // micro: TP 1, FP 1, FN 2
  const auto micro = corpus_f1(gold, pred, F1Variant::kBoundary);
  EXPECT_DOUBLE_EQ(micro.precision, 0.5);
  EXPECT_DOUBLE_EQ(micro.recall, 1.0 / 3.0);
  // macro: word 1 P=1 R=1/3 F=0.5; word 2 all zero
  const auto macro = corpus_f1(gold, pred, F1Variant::kBoundary, F1Average::kMacro);
  EXPECT_DOUBLE_EQ(macro.precision, 0.5);
  EXPECT_DOUBLE_EQ(macro.recall, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(macro.f1, 0.25);
  EXPECT_THROW(corpus_f1(gold, std::vector<SegmentedWord>{pred[0]}, F1Variant::kBoundary), ContractError);
}

// ---- ranking ----

TEST(Ranking, Examples) {
  auto r = rank_models({{"A", 0.8}, {"B", 0.7}}, 0.0);
  EXPECT_EQ(r.order, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(r.groups.size(), 2u);

  r = rank_models({{"A", 0.700}, {"B", 0.695}}, 0.02);
  EXPECT_EQ(r.groups, (std::vector<std::vector<std::string>>{{"A", "B"}}));

  r = rank_models({{"CRF", 0.80}, {"TRM_tiny", 0.68}, {"LSTM", 0.67}, {"TRM", 0.56}}, 0.02);
  EXPECT_EQ(r.groups, (std::vector<std::vector<std::string>>{{"CRF"}, {"TRM_tiny", "LSTM"}, {"TRM"}}));
  EXPECT_EQ(r.to_string(), "CRF > TRM_tiny = LSTM > TRM");
}

TEST(Ranking, EqualScoresOrderByName) {
  const auto r = rank_models({{"b", 0.5}, {"a", 0.5}, {"c", 0.9}}, 0.0);
  EXPECT_EQ(r.order, (std::vector<std::string>{"c", "a", "b"}));
  EXPECT_EQ(r.groups.size(), 3u);
  EXPECT_THROW(rank_models({{"a", 1.0}}), ContractError);
}

TEST(Ranking, InvariantUnderCommonShift) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, double> s, shifted;
    const double c = rng.uniform(-0.25, 0.25);
    for (const char* name : {"crf", "unigram", "logistic", "longest"}) {
      const double v = std::round(rng.uniform(0, 1) * 64) / 64;  // exact under shifts by c = k/128
      s[name] = v;
    }
    const double exact_c = std::round(c * 128) / 128;
    for (auto& [k, v] : s) shifted[k] = v + exact_c;
    const auto a = rank_models(s, 0.02), b = rank_models(shifted, 0.02);
    EXPECT_EQ(a.order, b.order);
    EXPECT_EQ(a.groups, b.groups);
  }
}

CellResult cell_with(const std::map<std::string, std::pair<double, double>>& f1) {
  CellResult c;
  for (const auto& [name, ev] : f1) {
    ModelScores s;
    s.boundary_eval.f1 = ev.first;
    s.boundary_new.f1 = ev.second;
    c.models[name] = s;
  }
  rank_cell(c);
  return c;
}

TEST(Consistency, CountsMatchingCells) {
  std::vector<CellResult> cells = {
      cell_with({{"a", {0.9, 0.9}}, {"b", {0.5, 0.5}}}),
      cell_with({{"a", {0.9, 0.8}}, {"b", {0.5, 0.4}}}),
      cell_with({{"a", {0.9, 0.4}}, {"b", {0.5, 0.6}}}),
      cell_with({{"a", {0.9, 0.7}}, {"b", {0.5, 0.2}}}),
  };
  EXPECT_DOUBLE_EQ(ranking_consistency(cells), 0.75);
  EXPECT_THROW(ranking_consistency(std::vector<CellResult>{}), DomainError);
}

TEST(Consistency, TieGroupsCompareAsSets) {
  auto a = rank_models({{"x", 0.5}, {"y", 0.51}, {"z", 0.1}});
  auto b = rank_models({{"x", 0.51}, {"y", 0.5}, {"z", 0.1}});
  EXPECT_NE(a.order, b.order);
  EXPECT_TRUE(same_ranking(a, b));
}

TEST(Consistency, RandomisedRecount) {
  Rng rng(3);
  std::vector<CellResult> cells;
  for (int i = 0; i < 60; ++i) {
    std::map<std::string, std::pair<double, double>> f;
    for (const char* n : {"p", "q", "r", "s"}) f[n] = {rng.uniform(0.5, 1), rng.uniform(0.5, 1)};
    cells.push_back(cell_with(f));
  }
  std::size_t same = 0;
  for (const auto& c : cells) {
    // Recount from the raw scores with an independent grouping.
    auto groups = [&](bool fresh) {
      std::vector<std::pair<double, std::string>> v;
      for (const auto& [n, s] : c.models) v.push_back({fresh ? s.boundary_new.f1 : s.boundary_eval.f1, n});
      std::sort(v.begin(), v.end(), [](auto& x, auto& y) { return x.first > y.first; });
      std::vector<std::set<std::string>> g;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i == 0 || v[i - 1].first - v[i].first >= 0.02) g.emplace_back();
        g.back().insert(v[i].second);
      }
      return g;
    };
    same += groups(false) == groups(true);
  }
  EXPECT_DOUBLE_EQ(ranking_consistency(cells), static_cast<double>(same) / 60.0);
  const double c = ranking_consistency(cells);
  EXPECT_GE(c, 0.0);
  EXPECT_LE(c, 1.0);
}

TEST(Gap, SignedAndAbsolute) {
  std::vector<CellResult> cells = {cell_with({{"a", {0.6, 0.5}}, {"b", {0.3, 0.3}}}),
                                   cell_with({{"a", {0.4, 0.5}}, {"b", {0.3, 0.3}}})};
  const auto g = generalization_gap(cells);
  EXPECT_NEAR(g.at("a").mean_signed, 0.0, 1e-15);
  EXPECT_NEAR(g.at("a").mean_abs, 0.1, 1e-15);
  EXPECT_EQ(g.at("b").mean_abs, 0.0);
  EXPECT_THROW(generalization_gap(std::vector<CellResult>{}), DomainError);
}

TEST(Variability, PopulationSigma) {
  std::vector<CellResult> cells = {cell_with({{"a", {0, 0}}, {"b", {0, 0.4}}}),
                                   cell_with({{"a", {0, 1}}, {"b", {0, 0.4}}})};
  const auto v = score_variability(cells);
  EXPECT_DOUBLE_EQ(v.at("a"), 0.5);
  EXPECT_DOUBLE_EQ(v.at("b"), 0.0);
  EXPECT_THROW(score_variability(std::span<const CellResult>(cells.data(), 1)), DomainError);
}

TEST(Variability, ThirtyCellRecount) {
  Rng rng(4);
  std::vector<CellResult> cells;
  std::vector<double> xs;
  for (int i = 0; i < 30; ++i) {
    xs.push_back(rng.uniform());
    cells.push_back(cell_with({{"m", {0.5, xs.back()}}, {"n", {0.5, 0.5}}}));
  }
  double sum = 0, sq = 0;
  for (double x : xs) {
    sum += x;
    sq += x * x;
  }
  const double mean = sum / 30;
  EXPECT_NEAR(score_variability(cells).at("m"), std::sqrt(sq / 30 - mean * mean), 1e-12);
}

TEST(Overlap, Examples) {
  const auto train = Corpus::from_words("t", {SegmentedWord("walked", {"walk", "ed"})});
  EXPECT_EQ(morpheme_overlap(train, Corpus::from_words("t", {SegmentedWord("walk", {"walk"})})), 1.0);
  EXPECT_EQ(morpheme_overlap(train, Corpus::from_words("t", {SegmentedWord("xy", {"x", "y"})})), 0.0);
  EXPECT_DOUBLE_EQ(morpheme_overlap(train, Corpus::from_words("t", {SegmentedWord("walks", {"walk", "s"})})), 0.5);
  EXPECT_THROW(morpheme_overlap(train, Corpus{}), DomainError);
}

TEST(Overlap, MatchesSetOracle) {
  SyntheticSpec spec;
  spec.stem_count = 15;
  spec.suffix_count = 6;
  spec.word_count = 80;
  spec.seed = 9;
  const auto c = generate_synthetic_corpus(spec);
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < c.size(); ++i) (i % 3 ? a : b).push_back(i);
  std::set<std::string> ta, tb, both;
  for (auto i : a) ta.insert(c[i].morphemes().begin(), c[i].morphemes().end());
  for (auto i : b) tb.insert(c[i].morphemes().begin(), c[i].morphemes().end());
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::inserter(both, both.end()));
  EXPECT_DOUBLE_EQ(morpheme_overlap(c.subset(a), c.subset(b)),
                   static_cast<double>(both.size()) / static_cast<double>(tb.size()));
}

TEST(CellResultJson, RoundTrip) {
  auto c = cell_with({{"crf", {0.9, 0.8}}, {"longest_match", {0.5, 0.6}}});
  c.cell_id = "random.adversarial.f0.10.s00.k0";
  c.language_tag = "syn";
  c.fraction = 0.1;
  c.residual_strategy = Strategy::kAdversarial;
  c.train_size = 10;
  c.morpheme_overlap = 0.25;
  c.average = F1Average::kMacro;
  EXPECT_EQ(cell_result_from_json(nlohmann::json::parse(to_json(c).dump())), c);
}

}  // namespace
}  // namespace morphsplit
