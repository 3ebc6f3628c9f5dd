#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morphsplit {

// I_x(a, b) by continued fraction. a, b > 0; x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double dof);
// P(|T| >= |t|), computed from the tail directly so tiny p values keep
// their relative precision.
double student_t_two_sided_p(double t, double dof);

// "***" below 0.001, "**" below 0.01, "*" below 0.05, else "".
std::string significance_stars(double p);

struct RegressionRecord {
  double f1 = 0.0;
  bool random_strategy = true;   // residual split was random
  bool random_new_test = true;   // new test was carved randomly
  double morpheme_overlap = 0.0;
  double word_count_ratio = 1.0;
  double morph_per_word_ratio = 1.0;
  double morph_type_per_word_ratio = 1.0;
  std::string model_arch;
};

// Row-major design matrix with its response and column names.
struct DesignMatrix {
  std::vector<std::string> terms;
  std::size_t rows = 0;
  std::vector<double> x;
  std::vector<double> y;
  // Constant or duplicate non-intercept columns: dropped when requested,
  // otherwise kept and reported here and by ols_fit.
  std::vector<std::string> warnings;
  std::vector<std::string> dropped;

  std::size_t cols() const { return terms.size(); }
  double at(std::size_t r, std::size_t c) const { return x[r * cols() + c]; }
};

// Columns, in order: intercept, strategy, new_test_gen, morpheme_overlap,
// word_count_ratio, morph_per_word_ratio, morph_type_per_word_ratio, one
// "arch[<level>]" dummy per architecture except the first in sorted order,
// then strategy:new_test_gen, strategy:morpheme_overlap,
// strategy:word_count_ratio, strategy:morph_per_word_ratio,
// strategy:morph_type_per_word_ratio. strategy and new_test_gen are 1 for
// random. With drop_degenerate, a column that is constant, duplicates an
// earlier one, or lies in the span of the kept columns is dropped and
// listed in `dropped`. Throws ContractError with fewer than 2 records or
// when strategy takes a single value.
DesignMatrix build_design_matrix(std::span<const RegressionRecord> records, bool drop_degenerate = false);

struct RegressionResult {
  std::vector<std::string> terms;
  std::vector<double> beta, se, t, p;
  std::vector<std::string> stars;
  double rss = 0.0;
  double tss = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  std::size_t dof = 0;
};

// Least squares through a column-pivoted Householder QR. Throws
// ContractError unless rows > columns, and SingularityError naming the
// linearly dependent columns when X is rank deficient. R^2 assumes the
// first column is the intercept.
RegressionResult ols_fit(const DesignMatrix& design);

}  // namespace morphsplit
