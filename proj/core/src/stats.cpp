#include "morphsplit/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "morphsplit/error.hpp"

namespace morphsplit {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw DomainError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw DomainError("incomplete beta needs a, b > 0");
  if (!(x >= 0 && x <= 1)) throw DomainError("incomplete beta needs x in [0, 1]");
  if (x == 0 || x == 1) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0)) throw DomainError("Student-t needs dof > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return std::clamp(regularized_incomplete_beta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

double student_t_cdf(double t, double dof) {
  const double tail = student_t_two_sided_p(t, dof) / 2.0;
  return t >= 0 ? 1.0 - tail : tail;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

DesignMatrix build_design_matrix(std::span<const RegressionRecord> records, bool drop_degenerate) {
  if (records.size() < 2) throw ContractError("regression needs at least two records");
  std::set<bool> strategies;
  std::set<std::string> levels;
  for (const auto& r : records) {
    strategies.insert(r.random_strategy);
    levels.insert(r.model_arch);
  }
  if (strategies.size() < 2) throw ContractError("regression needs both residual strategies");

  std::vector<std::string> terms = {"intercept",        "strategy",           "new_test_gen",
                                    "morpheme_overlap", "word_count_ratio",   "morph_per_word_ratio",
                                    "morph_type_per_word_ratio"};
  const std::vector<std::string> arch(std::next(levels.begin()), levels.end());
  for (const auto& a : arch) terms.push_back("arch[" + a + "]");
  for (const char* c : {"new_test_gen", "morpheme_overlap", "word_count_ratio", "morph_per_word_ratio",
                        "morph_type_per_word_ratio"}) {
    terms.push_back(std::string("strategy:") + c);
  }

  const std::size_t n = records.size(), k = terms.size();
  std::vector<std::vector<double>> columns(k, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    const double s = r.random_strategy ? 1.0 : 0.0;
    const double controls[5] = {r.random_new_test ? 1.0 : 0.0, r.morpheme_overlap, r.word_count_ratio,
                                r.morph_per_word_ratio, r.morph_type_per_word_ratio};
    std::size_t c = 0;
    columns[c++][i] = 1.0;
    columns[c++][i] = s;
    for (double v : controls) columns[c++][i] = v;
    for (const auto& a : arch) columns[c++][i] = r.model_arch == a ? 1.0 : 0.0;
    for (double v : controls) columns[c++][i] = s * v;
    y[i] = r.f1;
  }

  DesignMatrix d;
  d.rows = n;
  d.y = std::move(y);
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < k; ++c) {
    std::string problem;
    if (c > 0) {
      const auto& col = columns[c];
      if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; })) {
        problem = "column '" + terms[c] + "' is constant";
      } else {
        for (std::size_t prev : keep) {
          if (columns[prev] == col) {
            problem = "column '" + terms[c] + "' duplicates '" + terms[prev] + "'";
            break;
          }
        }
      }
    }
    if (problem.empty() && drop_degenerate && c > 0) {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(keep.size() + 1));
      for (std::size_t j = 0; j <= keep.size(); ++j) {
        const auto& col = j < keep.size() ? columns[keep[j]] : columns[c];
        for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
      }
      if (static_cast<std::size_t>(Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(m).rank()) <= keep.size()) {
        problem = "column '" + terms[c] + "' is a linear combination of earlier columns";
      }
    }
    if (!problem.empty()) {
      if (drop_degenerate) {
        d.dropped.push_back(terms[c]);
        continue;
      }
      d.warnings.push_back(problem);
    }
    keep.push_back(c);
  }
  for (std::size_t c : keep) d.terms.push_back(terms[c]);
  d.x.resize(n * keep.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) d.x[i * keep.size() + j] = columns[keep[j]][i];
  }
  return d;
}

RegressionResult ols_fit(const DesignMatrix& design) {
  const std::size_t n = design.rows, k = design.cols();
  if (k == 0 || n <= k) {
    throw ContractError("regression needs more rows (" + std::to_string(n) + ") than terms (" + std::to_string(k) +
                        ")");
  }
  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) x(i, j) = design.at(i, j);
    y(i) = design.y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (static_cast<std::size_t>(qr.rank()) < k) {
    std::ostringstream msg;
    msg << "design matrix has rank " << qr.rank() << " < " << k << " columns; dependent:";
    const auto& perm = qr.colsPermutation().indices();
    for (std::size_t j = qr.rank(); j < k; ++j) msg << " '" << design.terms[perm(j)] << "'";
    for (const auto& w : design.warnings) msg << "; " << w;
    throw SingularityError(msg.str());
  }

  RegressionResult r;
  r.terms = design.terms;
  r.n = n;
  r.dof = n - k;
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  r.rss = resid.squaredNorm();
  r.tss = (y.array() - y.mean()).matrix().squaredNorm();
  r.r_squared = r.tss > 0 ? std::clamp(1.0 - r.rss / r.tss, 0.0, 1.0) : 1.0;
  const double sigma2 = r.rss / static_cast<double>(r.dof);

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd rmat = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      rmat.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), k));
  const Eigen::VectorXd diag_perm = (rinv * rinv.transpose()).diagonal();
  Eigen::VectorXd diag(k);
  const auto& perm = qr.colsPermutation().indices();
  for (std::size_t j = 0; j < k; ++j) diag(perm(j)) = diag_perm(j);

  for (std::size_t j = 0; j < k; ++j) {
    const double b = beta(j);
    const double se = std::sqrt(sigma2 * diag(j));
    double t, p;
    if (se > 0) {
      t = b / se;
      p = student_t_two_sided_p(t, static_cast<double>(r.dof));
    } else {
      t = b == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
      p = b == 0 ? 1.0 : 0.0;
    }
    r.beta.push_back(b);
    r.se.push_back(se);
    r.t.push_back(t);
    r.p.push_back(p);
    r.stars.push_back(significance_stars(p));
  }
  return r;
}

}  // namespace morphsplit
