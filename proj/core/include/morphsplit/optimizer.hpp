#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace morphsplit {

enum class Optimizer { kLbfgs, kGradientDescent };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view text);

struct TrainConfig {
  Optimizer optimizer = Optimizer::kLbfgs;
  int max_iterations = 200;
  double convergence_tol = 1e-6;  // relative objective change
  double l2_lambda = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Objective value at x; writes the gradient into `grad` (same size as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct OptimizeResult {
  std::vector<double> x;
  // Objective at the start and after every accepted step; non-increasing.
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
};

// L-BFGS (memory 10) or steepest descent, both with Armijo backtracking.
// Throws TrainingError if the objective or gradient becomes non-finite.
OptimizeResult minimize(const Objective& f, std::vector<double> x0, const TrainConfig& config);

}  // namespace morphsplit
