#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/corpus.hpp"
#include "morphsplit/ratio.hpp"
#include "morphsplit/splitter.hpp"

namespace morphsplit {

struct ExperimentPlan {
  std::vector<Rational> new_test_fractions{{1, 10}, {2, 10}, {3, 10}, {4, 10}, {5, 10}};
  std::size_t samples_per_fraction = 10;
  std::size_t residual_splits_per_strategy = 3;
  SplitRatio residual_ratio{9, 1};
  Strategy new_test_generation = Strategy::kRandom;
  std::uint64_t master_seed = 0;
  std::uint64_t adversarial_budget = kDefaultAdversarialBudget;

  // Throws ConfigError when a fraction is outside (0,1) or a count is zero.
  void validate() const;
};

// One (train, eval, new test) combination, all indices into the original
// corpus.
struct GridCell {
  std::string cell_id;
  std::size_t fraction_index = 0;
  Rational fraction;
  std::size_t sample_index = 0;
  std::size_t split_index = 0;
  Strategy new_test_generation = Strategy::kRandom;
  Strategy residual_strategy = Strategy::kRandom;
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
  std::vector<std::size_t> new_test;
  // New-test carving (a = residual, b = new test), then the residual split
  // (a = train, b = eval).
  SplitManifest carving;
  SplitManifest residual;
};

nlohmann::json to_json(const GridCell& cell);
GridCell grid_cell_from_json(const nlohmann::json& j);

// "<new-test generation>.<residual strategy>.f<fraction>.s<sample>.k<split>"
std::string make_cell_id(Strategy new_test_generation, Strategy residual_strategy, const Rational& fraction,
                         std::size_t sample, std::size_t split);

// Seed of the new-test carving for (fraction, sample).
std::uint64_t carving_seed(const ExperimentPlan& plan, std::size_t fraction_index, std::size_t sample_index);
// Seed of residual split k for (fraction, sample). Random and adversarial
// residual splits of one cell share it, so the adversarial search starts
// from the random split it is compared with.
std::uint64_t residual_seed(const ExperimentPlan& plan, std::size_t fraction_index, std::size_t sample_index,
                            std::size_t split_index);

// Cells ordered by (fraction, sample, split). Carving and splitting are
// pure in their seeds, so `parallelism` never changes the result.
// Throws CapacityError when any train, eval, or new-test set would be empty.
std::vector<GridCell> build_grid(const Corpus& corpus, const ExperimentPlan& plan, Strategy residual_strategy,
                                 std::size_t parallelism = 1);

}  // namespace morphsplit
