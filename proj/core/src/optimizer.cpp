#include "morphsplit/optimizer.hpp"

#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "morphsplit/error.hpp"

namespace morphsplit {

std::string_view to_string(Optimizer o) { return o == Optimizer::kLbfgs ? "lbfgs" : "gradient_descent"; }

Optimizer parse_optimizer(std::string_view text) {
  if (text == "lbfgs") return Optimizer::kLbfgs;
  if (text == "gradient_descent") return Optimizer::kGradientDescent;
  throw ConfigError("unknown optimizer '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(l2_lambda >= 0.0)) throw ConfigError("l2_lambda must be >= 0");
  if (!(convergence_tol >= 0.0)) throw ConfigError("convergence_tol must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"optimizer", to_string(c.optimizer)},
          {"max_iterations", c.max_iterations},
          {"convergence_tol", c.convergence_tol},
          {"l2_lambda", c.l2_lambda},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  c.max_iterations = j.at("max_iterations").get<int>();
  c.convergence_tol = j.at("convergence_tol").get<double>();
  c.l2_lambda = j.at("l2_lambda").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

[[noreturn]] void diverged(int iteration, double value, std::span<const double> x) {
  std::ostringstream msg;
  msg << "objective became non-finite at iteration " << iteration << " (value " << value
      << ", |w| = " << std::sqrt(dot(x, x)) << ", " << x.size() << " parameters)";
  throw TrainingError(msg.str());
}

struct Correction {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion: direction = -H * grad.
std::vector<double> lbfgs_direction(const std::deque<Correction>& memory, std::span<const double> grad) {
  std::vector<double> q(grad.begin(), grad.end());
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * dot(memory[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * memory[k].y[i];
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * dot(memory[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += memory[k].s[i] * (alpha[k] - beta);
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

OptimizeResult minimize(const Objective& f, std::vector<double> x0, const TrainConfig& config) {
  config.validate();
  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 50;

  OptimizeResult result;
  std::vector<double> x = std::move(x0);
  std::vector<double> grad(x.size());
  double fx = f(x, grad);
  if (!std::isfinite(fx) || !all_finite(grad)) diverged(0, fx, x);
  result.history.push_back(fx);

  std::deque<Correction> memory;
  std::vector<double> x_new(x.size()), grad_new(x.size());
  double step_hint = 1.0;

  for (int it = 1; it <= config.max_iterations; ++it) {
    const double gnorm = std::sqrt(dot(grad, grad));
    if (gnorm < 1e-12) {
      result.converged = true;
      break;
    }
    std::vector<double> dir;
    double step;
    if (config.optimizer == Optimizer::kLbfgs) {
      dir = lbfgs_direction(memory, grad);
      if (dot(dir, grad) >= 0.0) {  // lost descent; restart from steepest
        memory.clear();
        dir = lbfgs_direction(memory, grad);
      }
      step = memory.empty() ? 1.0 / gnorm : 1.0;
    } else {
      dir.resize(grad.size());
      for (std::size_t i = 0; i < grad.size(); ++i) dir[i] = -grad[i];
      step = it == 1 ? 1.0 / gnorm : step_hint * 2.0;
    }

    const double slope = dot(dir, grad);
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt, step *= 0.5) {
      for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + step * dir[i];
      f_new = f(x_new, grad_new);
      if (std::isfinite(f_new) && all_finite(grad_new) && f_new <= fx + kArmijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!std::isfinite(f_new)) diverged(it, f_new, x_new);
      result.converged = true;  // no further decrease representable
      break;
    }
    step_hint = step;

    Correction c{std::vector<double>(x.size()), std::vector<double>(x.size()), 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      c.s[i] = x_new[i] - x[i];
      c.y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(c.s, c.y);
    if (config.optimizer == Optimizer::kLbfgs && sy > 1e-12) {
      c.rho = 1.0 / sy;
      memory.push_back(std::move(c));
      if (memory.size() > kMemory) memory.pop_front();
    }

    const double previous = fx;
    x.swap(x_new);
    grad.swap(grad_new);
    fx = f_new;
    result.history.push_back(fx);
    result.iterations = it;
    const double scale = std::max({std::abs(previous), std::abs(fx), 1.0});
    if (std::abs(previous - fx) / scale < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  result.x = std::move(x);
  return result;
}

}  // namespace morphsplit
