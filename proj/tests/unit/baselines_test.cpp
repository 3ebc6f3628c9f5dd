#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "crf_oracle.hpp"
#include "morphsplit/baselines.hpp"
#include "morphsplit/error.hpp"
#include "morphsplit/segmenter.hpp"
#include "morphsplit/synthetic.hpp"

namespace morphsplit {
namespace {

Corpus corpus_of(std::vector<SegmentedWord> words) { return Corpus::from_words("t", std::move(words)); }

std::vector<std::string> parts(const SegmentedWord& w) { return w.morphemes(); }

// ---- unigram ----

// Best segmentation by scanning all 2^(L-1) cut sets; ties to fewer pieces.
std::vector<std::string> brute_unigram(const UnigramModel& m, const std::string& s) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_pieces = 0;
  std::vector<std::string> out;
  const std::size_t gaps = s.size() - 1;
  for (std::uint32_t mask = 0; mask < (1u << gaps); ++mask) {
    std::vector<std::string> pieces(1);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0 && ((mask >> (i - 1)) & 1u)) pieces.emplace_back();
      pieces.back() += s[i];
    }
    double score = 0;
    for (const auto& p : pieces) score += m.log_probability(p);
    if (score > best + 1e-12 || (std::abs(score - best) <= 1e-12 && pieces.size() < best_pieces)) {
      best = score;
      best_pieces = pieces.size();
      out = pieces;
    }
  }
  return out;
}

Corpus walk_corpus() {
  return corpus_of({SegmentedWord("walked", {"walk", "ed"}), SegmentedWord("walking", {"walk", "ing"}),
                    SegmentedWord("talked", {"talk", "ed"})});
}

TEST(Unigram, SegmentsTalked) {
  const auto m = train_unigram_viterbi(walk_corpus());
  EXPECT_EQ(parts(m.segment("talked")), (std::vector<std::string>{"talk", "ed"}));
  EXPECT_EQ(brute_unigram(m, "talked"), (std::vector<std::string>{"talk", "ed"}));
}

TEST(Unigram, Probabilities) {
  const auto m = train_unigram_viterbi(walk_corpus(), 0.5);
  // counts walk 2, ed 2, ing 1, talk 1; total 6; V 4
  EXPECT_NEAR(m.log_probability("walk"), std::log(2.5 / 8.5), 1e-12);
  EXPECT_NEAR(m.log_probability("zzz"), std::log(0.5 / 8.5), 1e-12);
}

TEST(Unigram, SingleTrainingMorpheme) {
  const auto m = train_unigram_viterbi(walk_corpus());
  EXPECT_EQ(parts(m.segment("walk")), std::vector<std::string>{"walk"});
}

TEST(Unigram, UnseenCharactersStayWhole) {
  const auto m = train_unigram_viterbi(walk_corpus());
  EXPECT_EQ(parts(m.segment("xyzq")), std::vector<std::string>{"xyzq"});
}

TEST(Unigram, AgreesWithBruteForce) {
  SyntheticSpec spec;
  spec.stem_count = 10;
  spec.suffix_count = 5;
  spec.word_count = 40;
  spec.seed = 3;
  const auto corpus = generate_synthetic_corpus(spec);
  for (double s : {0.01, 0.1, 1.0}) {
    const auto m = train_unigram_viterbi(corpus.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), s);
    for (const auto& w : corpus.words()) {
      if (w.surface().size() > 14) continue;
      EXPECT_EQ(parts(m.segment(w.surface())), brute_unigram(m, w.surface())) << w.surface() << " s=" << s;
    }
  }
}

TEST(Unigram, Preconditions) {
  EXPECT_THROW(train_unigram_viterbi(Corpus{}), ContractError);
  EXPECT_THROW(train_unigram_viterbi(walk_corpus(), 0.0), ContractError);
}

// ---- longest match ----

TEST(LongestMatch, Examples) {
  EXPECT_EQ(parts(LongestMatchModel({"walk", "ed"}).segment("walked")), (std::vector<std::string>{"walk", "ed"}));
  EXPECT_EQ(parts(LongestMatchModel({"a", "ab"}).segment("ab")), std::vector<std::string>{"ab"});
  EXPECT_EQ(parts(LongestMatchModel({}).segment("ab")), (std::vector<std::string>{"a", "b"}));
}

TEST(LongestMatch, FallbackIsOneCluster) {
  LongestMatchModel m({"ed"});
  EXPECT_EQ(parts(m.segment("e\xCC\x81" "ed")), (std::vector<std::string>{"e\xCC\x81", "ed"}));
}

TEST(LongestMatch, TrainsFromMorphemes) {
  const auto m = train_longest_match(walk_corpus());
  EXPECT_EQ(m.lexicon(), (std::set<std::string>{"ed", "ing", "talk", "walk"}));
  EXPECT_EQ(parts(m.segment("talking")), (std::vector<std::string>{"talk", "ing"}));
  EXPECT_THROW(train_longest_match(Corpus{}), ContractError);
}

// ---- boundary logistic ----

Corpus x_corpus() {
  return corpus_of({SegmentedWord("axb", {"ax", "b"}), SegmentedWord("bxa", {"bx", "a"}),
                    SegmentedWord("abxab", {"abx", "ab"}), SegmentedWord("ab", {"ab"}),
                    SegmentedWord("ba", {"ba"}), SegmentedWord("xa", {"x", "a"})});
}

TEST(BoundaryLogistic, LearnsBoundaryAfterX) {
  const FeatureTemplate unigram{1, 0, false};
  TrainConfig cfg;
  cfg.l2_lambda = 0.01;
  const auto m = train_boundary_logistic(x_corpus(), unigram, cfg);
  EXPECT_EQ(parts(m.segment("axb")), (std::vector<std::string>{"ax", "b"}));
  EXPECT_EQ(parts(m.segment("baxbb")), (std::vector<std::string>{"bax", "bb"}));
  // The toy data is separable by the single feature L|1g+0=x: a gap has a
  // boundary exactly when its left cluster is x.
  const auto corpus = x_corpus();
  for (const auto& w : corpus.words()) {
    const auto b = w.boundaries();
    for (std::size_t g = 0; g + 1 < w.surface().size(); ++g) {
      const bool expected = std::find(b.begin(), b.end(), g + 1) != b.end();
      EXPECT_EQ(w.surface()[g] == 'x', expected) << w.surface() << " gap " << g;
    }
  }
}

TEST(BoundaryLogistic, HalfProbabilityIsNoBoundary) {
  FeatureIndex idx;
  BoundaryLogisticModel m(FeatureTemplate{}, idx, {0.0}, 0.0);
  EXPECT_EQ(m.boundary_probability("abc", 0), 0.5);
  EXPECT_EQ(parts(m.segment("abc")), std::vector<std::string>{"abc"});
}

TEST(BoundaryLogistic, GradientFiniteDifferences) {
  Rng rng(21);
  for (int restart = 0; restart < 10; ++restart) {
    std::vector<SegmentedWord> batch;
    std::vector<std::string> words;
    for (int k = 0; k < 4; ++k) {
      words.push_back(testing::random_word(rng, 2 + rng.below(5)));
      batch.push_back(testing::random_segmentation(rng, words.back()));
    }
    FeatureIndex idx;
    for (const auto& w : words) {
      for (const auto& gap : gap_features(graphemes(w), FeatureTemplate{})) {
        for (const auto& f : gap) idx.add(f);
      }
    }
    std::vector<double> weights(idx.size() + 1);
    for (double& x : weights) x = rng.uniform(-1, 1);
    BoundaryLogisticModel m(FeatureTemplate{}, idx, weights, 0.2);
    const auto g = logistic_gradient(m, batch);
    auto f = [&](const std::vector<double>& w) {
      return logistic_gradient(BoundaryLogisticModel(FeatureTemplate{}, idx, w, 0.2), batch).objective;
    };
    EXPECT_LT(testing::max_fd_error(f, weights, g.gradient), 1e-4) << "restart " << restart;
  }
}

TEST(BoundaryLogistic, NoGapsMeansPenaltyOnly) {
  FeatureIndex idx;
  idx.add("f");
  BoundaryLogisticModel m(FeatureTemplate{}, idx, {0.3, 2.0}, 0.5);
  const auto g = logistic_gradient(m, std::vector<SegmentedWord>{SegmentedWord("a", {"a"})});
  EXPECT_NEAR(g.objective, 0.5 * 0.5 * 4.0, 1e-12);
  EXPECT_EQ(g.gradient, (std::vector<double>{0.0, 1.0}));
}

TEST(BoundaryLogistic, JsonRoundTripAndDeterminism) {
  const auto a = train_boundary_logistic(x_corpus(), FeatureTemplate{}, TrainConfig{});
  const auto b = train_boundary_logistic(x_corpus(), FeatureTemplate{}, TrainConfig{});
  EXPECT_EQ(a, b);
  EXPECT_EQ(boundary_logistic_from_json(nlohmann::json::parse(to_json(a).dump())), a);
}

// ---- uniform interface ----

TEST(Segmenters, AllBuiltinsConcatenate) {
  SyntheticSpec spec;
  spec.stem_count = 12;
  spec.suffix_count = 6;
  spec.word_count = 60;
  spec.seed = 5;
  const auto corpus = generate_synthetic_corpus(spec);
  ModelSettings settings;
  settings.train.max_iterations = 30;
  Rng rng(5);
  std::vector<std::string> inputs;
  for (const auto& w : corpus.words()) inputs.push_back(w.surface());
  const std::vector<std::string> alphabet = {"a", "e", "i", "k", "t", "\xC3\xA9", "e\xCC\x81", "\xE3\x81\x8B"};
  for (int k = 0; k < 30; ++k) {
    std::string w;
    for (std::size_t n = 1 + rng.below(9); n > 0; --n) w += alphabet[rng.below(alphabet.size())];
    inputs.push_back(w);
  }
  inputs.push_back("na\xC3\xAFve\xF0\x9F\x91\x8D\xF0\x9F\x8F\xBD");
  for (const auto& id : builtin_segmenters()) {
    const auto model = train_segmenter(id, corpus, settings);
    EXPECT_EQ(model->id(), id);
    for (const auto& s : inputs) {
      const auto seg = model->segment(s);
      std::string joined;
      for (const auto& m : seg.morphemes()) joined += m;
      EXPECT_EQ(joined, s) << id.name();
    }
    const auto reloaded = load_segmenter(nlohmann::json::parse(model->to_json().dump()));
    EXPECT_EQ(reloaded->segment_all(inputs), model->segment_all(inputs)) << id.name();
  }
}

TEST(Segmenters, Ids) {
  EXPECT_EQ(parse_segmenter_id("crf").kind, ModelKind::kCrf);
  EXPECT_EQ(parse_segmenter_id("external:python3 m.py").command, "python3 m.py");
  EXPECT_THROW(parse_segmenter_id("external:"), ConfigError);
  EXPECT_THROW(parse_segmenter_id("lstm"), ConfigError);
  EXPECT_EQ(builtin_segmenters().size(), 4u);
  EXPECT_EQ(model_settings_from_json(to_json(ModelSettings{})), ModelSettings{});
}

// ---- external adapter ----

class ExternalAdapter : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("morphsplit-adapter-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string script(const std::string& name, const std::string& body) {
    const auto p = dir_ / name;
    std::ofstream(p) << body;
    return "sh '" + p.string() + "'";
  }

  std::filesystem::path dir_;
};

TEST_F(ExternalAdapter, IdentityCommandKeepsWordsWhole) {
  const auto cmd = script("identity.sh", "cp \"$2\" \"$3\"\n");
  std::vector<std::string> inputs = {"avocados", "walked", "e\xCC\x81t\xC3\xA9"};
  const auto out = external_segment(cmd, walk_corpus(), inputs);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out[i].morphemes(), std::vector<std::string>{inputs[i]});
}

TEST_F(ExternalAdapter, WireFormat) {
  std::ostringstream train;
  write_wire_train(train, corpus_of({SegmentedWord("avocados", {"avocado", "s"})}));
  EXPECT_EQ(train.str(), "a v o c a d o s\ta v o c a d o ! s\n");
  EXPECT_EQ(wire_input_line("e\xCC\x81t"), "e\xCC\x81 t");
  EXPECT_EQ(parse_wire_output("avocados", "a v o c a d o ! s").morphemes(),
            (std::vector<std::string>{"avocado", "s"}));
  EXPECT_THROW(parse_wire_output("avocados", "a v o c a d o ! z"), AdapterError);
  EXPECT_THROW(parse_wire_output("ab", "! a b"), AdapterError);
  EXPECT_THROW(parse_wire_output("ab", "a b !"), AdapterError);
  EXPECT_THROW(parse_wire_output("ab", "a ! ! b"), AdapterError);
}

TEST_F(ExternalAdapter, ReceivesTrainFileAndSeed) {
  const auto seen = dir_ / "seen.txt";
  const auto cmd = script("spy.sh", "cp \"$1\" '" + seen.string() + "'\necho \"$MORPHSPLIT_SEED\" >> '" +
                                        seen.string() + "'\nsed 's/ d o/ ! d o/' \"$2\" > \"$3\"\n");
  const auto out = external_segment(cmd, walk_corpus(), std::vector<std::string>{"avocados"}, 42);
  EXPECT_EQ(out[0].morphemes(), (std::vector<std::string>{"avoca", "dos"}));
  std::ifstream in(seen);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "w a l k e d\tw a l k ! e d\nw a l k i n g\tw a l k ! i n g\nt a l k e d\tt a l k ! e d\n42\n");
}

TEST_F(ExternalAdapter, FailuresCarryDiagnostics) {
  const auto failing = script("fail.sh", "echo 'model exploded' >&2\nexit 3\n");
  try {
    external_segment(failing, walk_corpus(), std::vector<std::string>{"ab"});
    FAIL() << "expected AdapterError";
  } catch (const AdapterError& e) {
    EXPECT_NE(std::string(e.what()).find("status 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("model exploded"), std::string::npos);
  }
  const auto wrong = script("wrong.sh", "echo 'a v o c a d o ! z' > \"$3\"\n");
  EXPECT_THROW(external_segment(wrong, walk_corpus(), std::vector<std::string>{"avocados"}), AdapterError);
  const auto short_output = script("short.sh", "echo 'a b' > \"$3\"\n");
  EXPECT_THROW(external_segment(short_output, walk_corpus(), std::vector<std::string>{"ab", "cd"}), AdapterError);
  const auto silent = script("silent.sh", "true\n");
  EXPECT_THROW(external_segment(silent, walk_corpus(), std::vector<std::string>{"ab"}), AdapterError);
}

TEST_F(ExternalAdapter, ThroughSegmenterInterface) {
  const auto cmd = script("identity.sh", "cp \"$2\" \"$3\"\n");
  const auto model = train_segmenter(SegmenterId::external(cmd), walk_corpus(), ModelSettings{});
  EXPECT_EQ(model->segment("talks").morphemes(), std::vector<std::string>{"talks"});
  EXPECT_THROW(model->to_json(), AdapterError);
}

}  // namespace
}  // namespace morphsplit
