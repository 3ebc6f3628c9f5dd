#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/corpus.hpp"
#include "morphsplit/ratio.hpp"

namespace morphsplit {

enum class Strategy { kRandom, kAdversarial, kHeuristic };
enum class Stage { kNewTestCarving, kResidualSplit };

std::string_view to_string(Strategy s);
std::string_view to_string(Stage s);
Strategy parse_strategy(std::string_view text);
Stage parse_stage(std::string_view text);

// Relative morpheme token frequencies. Support is sorted bytewise.
struct MorphemeDistribution {
  std::vector<std::string> support;
  std::vector<double> probabilities;

  // 0 for morphemes outside the support.
  double probability(std::string_view morpheme) const;
};

// Throws DomainError on an empty slice.
MorphemeDistribution morpheme_distribution(const Corpus& corpus);
MorphemeDistribution morpheme_distribution(const Corpus& corpus, std::span<const std::size_t> indices);

// 1-Wasserstein distance under the 0/1 ground metric, i.e. total variation
// 1/2 * sum |p(m) - q(m)| over the union of supports. Lies in [0, 1].
double distribution_distance(const MorphemeDistribution& p, const MorphemeDistribution& q);

// One two-way partition of a parent index set. Side b is the held-out side
// (new test when carving, eval when splitting the residual).
struct SplitManifest {
  Strategy strategy = Strategy::kRandom;
  Stage stage = Stage::kResidualSplit;
  std::uint64_t seed = 0;
  std::vector<std::size_t> indices_a;  // ascending
  std::vector<std::size_t> indices_b;  // ascending
  SplitRatio target_ratio;
  double achieved_distance = 0.0;
  std::uint64_t budget_used = 0;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

nlohmann::json to_json(const SplitManifest& m);
SplitManifest manifest_from_json(const nlohmann::json& j);

inline constexpr std::uint64_t kUnlimitedBudget = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kDefaultAdversarialBudget = 50'000;
// Climbs per adversarial split: one from the seed's random split, the rest
// from further seeded random partitions while budget remains.
inline constexpr std::size_t kAdversarialRestarts = 8;

// Uniform seeded partition of `parent` (indices into `corpus`); the whole
// corpus when `parent` is empty. Throws SplitError if either side would be
// empty.
SplitManifest random_split(const Corpus& corpus, const SplitRatio& ratio, std::uint64_t seed,
                           std::span<const std::size_t> parent = {}, Stage stage = Stage::kResidualSplit);

// Hill climbing over single-pair swaps from random_split(.., seed), taking
// the first swap that strictly increases the distance between the two
// sides' morpheme distributions. Stops at a local maximum or when `budget`
// swap evaluations are spent. Swaps between words with identical morpheme
// multisets are skipped and not counted.
SplitManifest adversarial_split(const Corpus& corpus, const SplitRatio& ratio, std::uint64_t seed,
                                std::uint64_t budget = kDefaultAdversarialBudget,
                                std::span<const std::size_t> parent = {}, Stage stage = Stage::kResidualSplit);

inline const Rational kDefaultHeuristicTolerance{1, 50};

struct HeuristicOutcome {
  // Empty when no morpheme-count threshold reaches the target share.
  std::optional<SplitManifest> manifest;
  std::size_t threshold = 0;
  double achieved_share = 0.0;

  bool found() const { return manifest.has_value(); }
};

// Words whose morpheme count is >= t go to side b. Candidate thresholds are
// the distinct per-word counts, ascending; the first with the smallest
// share deviation within `tolerance` wins. Both sides must be non-empty.
HeuristicOutcome heuristic_split(const Corpus& corpus, const SplitRatio& ratio,
                                 const Rational& tolerance = kDefaultHeuristicTolerance,
                                 std::span<const std::size_t> parent = {}, Stage stage = Stage::kResidualSplit);

}  // namespace morphsplit
