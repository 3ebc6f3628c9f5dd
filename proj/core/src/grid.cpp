#include "morphsplit/grid.hpp"

#include <cstdio>

#include "morphsplit/error.hpp"
#include "morphsplit/parallel.hpp"
#include "morphsplit/random.hpp"

namespace morphsplit {

void ExperimentPlan::validate() const {
  if (new_test_fractions.empty()) throw ConfigError("plan needs at least one new-test fraction");
  for (const auto& f : new_test_fractions) {
    if (f.num() <= 0 || f.num() >= f.den()) throw ConfigError("new-test fraction " + f.decimal() + " outside (0,1)");
  }
  if (samples_per_fraction == 0) throw ConfigError("samples_per_fraction must be >= 1");
  if (residual_splits_per_strategy == 0) throw ConfigError("residual_splits_per_strategy must be >= 1");
  if (new_test_generation == Strategy::kHeuristic) throw ConfigError("new tests are generated randomly or adversarially");
}

std::string make_cell_id(Strategy new_test_generation, Strategy residual_strategy, const Rational& fraction,
                         std::size_t sample, std::size_t split) {
  char buf[96];
  std::snprintf(buf, sizeof buf, ".f%s.s%02zu.k%zu", fraction.decimal().c_str(), sample, split);
  return std::string(to_string(new_test_generation)) + "." + std::string(to_string(residual_strategy)) + buf;
}

namespace {

constexpr std::uint64_t kCarveSplitIndex = ~std::uint64_t{0};

std::uint64_t tag(std::string_view prefix, Strategy s) {
  return fnv1a64(std::string(prefix) + std::string(to_string(s)));
}

SplitManifest run_split(const Corpus& corpus, Strategy strategy, const SplitRatio& ratio, std::uint64_t seed,
                        std::uint64_t budget, std::span<const std::size_t> parent, Stage stage) {
  try {
    if (strategy == Strategy::kAdversarial) return adversarial_split(corpus, ratio, seed, budget, parent, stage);
    return random_split(corpus, ratio, seed, parent, stage);
  } catch (const SplitError& e) {
    throw CapacityError(std::string("grid cell would have an empty set: ") + e.what());
  }
}

}  // namespace

std::uint64_t carving_seed(const ExperimentPlan& plan, std::size_t fraction_index, std::size_t sample_index) {
  return derive_seed(plan.master_seed,
                     {fraction_index, sample_index, kCarveSplitIndex, tag("carve:", plan.new_test_generation)});
}

std::uint64_t residual_seed(const ExperimentPlan& plan, std::size_t fraction_index, std::size_t sample_index,
                            std::size_t split_index) {
  return derive_seed(plan.master_seed,
                     {fraction_index, sample_index, split_index, tag("residual:", plan.new_test_generation)});
}

nlohmann::json to_json(const GridCell& cell) {
  return nlohmann::json{{"cell_id", cell.cell_id},
                        {"fraction_index", cell.fraction_index},
                        {"fraction", std::to_string(cell.fraction.num()) + "/" + std::to_string(cell.fraction.den())},
                        {"sample_index", cell.sample_index},
                        {"split_index", cell.split_index},
                        {"new_test_generation", to_string(cell.new_test_generation)},
                        {"residual_strategy", to_string(cell.residual_strategy)},
                        {"train", cell.train},
                        {"eval", cell.eval},
                        {"new_test", cell.new_test},
                        {"provenance", nlohmann::json::array({to_json(cell.carving), to_json(cell.residual)})}};
}

GridCell grid_cell_from_json(const nlohmann::json& j) {
  GridCell c;
  c.cell_id = j.at("cell_id").get<std::string>();
  c.fraction_index = j.at("fraction_index").get<std::size_t>();
  c.fraction = Rational::parse(j.at("fraction").get<std::string>());
  c.sample_index = j.at("sample_index").get<std::size_t>();
  c.split_index = j.at("split_index").get<std::size_t>();
  c.new_test_generation = parse_strategy(j.at("new_test_generation").get<std::string>());
  c.residual_strategy = parse_strategy(j.at("residual_strategy").get<std::string>());
  c.train = j.at("train").get<std::vector<std::size_t>>();
  c.eval = j.at("eval").get<std::vector<std::size_t>>();
  c.new_test = j.at("new_test").get<std::vector<std::size_t>>();
  const auto& prov = j.at("provenance");
  c.carving = manifest_from_json(prov.at(0));
  c.residual = manifest_from_json(prov.at(1));
  return c;
}

std::vector<GridCell> build_grid(const Corpus& corpus, const ExperimentPlan& plan, Strategy residual_strategy,
                                 std::size_t parallelism) {
  plan.validate();
  if (residual_strategy == Strategy::kHeuristic) {
    throw ConfigError("grid residual splits are random or adversarial");
  }
  const std::size_t nf = plan.new_test_fractions.size();
  const std::size_t ns = plan.samples_per_fraction;
  const std::size_t nk = plan.residual_splits_per_strategy;

  std::vector<SplitManifest> carvings(nf * ns);
  parallel_for(carvings.size(), parallelism, [&](std::size_t c) {
    const std::size_t fi = c / ns, si = c % ns;
    carvings[c] = run_split(corpus, plan.new_test_generation, SplitRatio::from_share(plan.new_test_fractions[fi]),
                            carving_seed(plan, fi, si), plan.adversarial_budget, {}, Stage::kNewTestCarving);
  });

  std::vector<GridCell> cells(nf * ns * nk);
  parallel_for(cells.size(), parallelism, [&](std::size_t c) {
    const std::size_t fi = c / (ns * nk), si = (c / nk) % ns, k = c % nk;
    const SplitManifest& carving = carvings[fi * ns + si];
    GridCell& cell = cells[c];
    cell.fraction_index = fi;
    cell.fraction = plan.new_test_fractions[fi];
    cell.sample_index = si;
    cell.split_index = k;
    cell.new_test_generation = plan.new_test_generation;
    cell.residual_strategy = residual_strategy;
    cell.cell_id = make_cell_id(plan.new_test_generation, residual_strategy, cell.fraction, si, k);
    cell.carving = carving;
    cell.residual = run_split(corpus, residual_strategy, plan.residual_ratio, residual_seed(plan, fi, si, k),
                              plan.adversarial_budget, carving.indices_a, Stage::kResidualSplit);
    cell.train = cell.residual.indices_a;
    cell.eval = cell.residual.indices_b;
    cell.new_test = carving.indices_b;
  });
  return cells;
}

}  // namespace morphsplit
