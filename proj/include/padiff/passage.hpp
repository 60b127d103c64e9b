#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "padiff/heat.hpp"
#include "padiff/padic.hpp"
#include "padiff/pseudodiff.hpp"

namespace padiff {

// Return flux into B_0 from the annulus 1 < |y|_p <= p^{-r}:
//   g(t) = -int_annulus K_alpha(y) u(y, t) dy = -sum_{j=1}^{-r} K(p^j) vol(|y|=p^j) u(p^j, t).
// The sign makes g a nonnegative flux (K_alpha < 0 on the annulus).
inline ExponentialModeSum g_modes(const ModelParams& params) {
  require_annulus(params);
  ExponentialModeSum g;
  for (int j = 1; j <= -params.r; ++j) {
    const double weight = -kernel_K(-j, params) * sphere_volume(-j, params.p);
    g = g + weight * u_modes(-j, params);
  }
  return g;
}

// S'(t) - (g(t) - C S(t)).
inline double balance_residual(const ModelParams& params, double t) {
  const auto survival = survival_S_modes(params);
  const auto g = g_modes(params);
  const double c = kernel_C(params);
  return survival.derivative()(t) - (g(t) - c * survival(t));
}

// Values on the uniform grid t_i = i dt, i = 0..M.
struct TimeGrid {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> values;

  static TimeGrid uniform(double dt, double horizon) {
    if (!(dt > 0)) throw parameter_error("grid step must be positive");
    const auto steps = static_cast<std::size_t>(std::floor(horizon / dt * (1.0 + 1e-12)));
    TimeGrid grid;
    grid.dt = dt;
    grid.times.resize(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) grid.times[i] = static_cast<double>(i) * dt;
    grid.values.assign(steps + 1, 0.0);
    return grid;
  }

  static TimeGrid sample(const ExponentialModeSum& f, double dt, double horizon) {
    TimeGrid grid = uniform(dt, horizon);
    for (std::size_t i = 0; i < grid.times.size(); ++i) grid.values[i] = f(grid.times[i]);
    return grid;
  }

  double horizon() const { return times.empty() ? 0.0 : times.back(); }
  std::size_t size() const noexcept { return values.size(); }
};

// Solves g(t) = int_0^t g(t - tau) f(tau) dtau + f(t) for f by forward
// substitution with the trapezoidal rule:
//   f_i (1 + dt g_0 / 2) = g_i - dt (g_i f_0 / 2 + sum_{j=1}^{i-1} g_{i-j} f_j).
inline TimeGrid volterra_solve(const TimeGrid& g) {
  if (g.values.size() != g.times.size() || g.times.empty()) throw parameter_error("malformed time grid");
  if (!(g.dt > 0)) throw parameter_error("grid step must be positive");
  for (std::size_t i = 0; i < g.times.size(); ++i) {
    const double expected = static_cast<double>(i) * g.dt;
    if (std::abs(g.times[i] - expected) > 1e-9 * std::max(1.0, expected)) {
      throw parameter_error("volterra_solve requires a uniform grid starting at t = 0");
    }
  }
  const auto& gv = g.values;
  const double h = g.dt;
  TimeGrid f = g;
  auto& fv = f.values;
  fv[0] = gv[0];
  const double diag = 1.0 + 0.5 * h * gv[0];
  for (std::size_t i = 1; i < gv.size(); ++i) {
    double conv = 0.5 * gv[i] * fv[0];
    for (std::size_t j = 1; j < i; ++j) conv += gv[i - j] * fv[j];
    fv[i] = (gv[i] - h * conv) / diag;
  }
  return f;
}

inline void require_positive_s(double s) {
  if (!(s > 0)) throw domain_error("s > 0 required (G_r has a pole at 0), got " + std::to_string(s));
}

// G_r(s) = sum_m a_m / (s + lambda_m) from the modes of g.
inline double laplace_G(double s, const ModelParams& params) {
  require_positive_s(s);
  return g_modes(params).laplace(s);
}

// G_r(s) from the y-first expansion: the block |xi|_p <= p^r gives C p^r / s,
// and each pair (y-sphere p^k, xi-sphere p^{-m}) with 1 <= k <= -r,
// 0 <= m <= -r-1 gives
//   -p^{k-m} / (s + p^{-m alpha} - p^{r alpha}) int_{|u|=1} int_{|v|=1} K(p^{-k} u) chi(-p^{m-k} u v) dv du.
// For m >= k the character is identically 1; for m < k the inner integral is
// summed over the residues of v modulo p^{k-m}.
inline double laplace_G_expansion(double s, const ModelParams& params) {
  require_positive_s(s);
  require_annulus(params);
  const unsigned p = params.p;
  const int depth = -params.r;
  const double unit_sphere = 1.0 - 1.0 / p;
  double total = kernel_C(params) * ipow(p, params.r) / s;
  for (int k = 1; k <= depth; ++k) {
    const double k_on_sphere = kernel_K(-k, params) * unit_sphere;  // int_{|u|=1} K(p^{-k} u) du
    for (int m = 0; m <= depth - 1; ++m) {
      const double resolvent = ipow(p, k - m) / (s + decay_rate(-m, params));
      double character_mean = unit_sphere;  // int_{|v|=1} chi(-p^{m-k} u v) dv, independent of the unit u
      if (m < k) {
        const int width = k - m;
        const std::int64_t residues = static_cast<std::int64_t>(std::llround(ipow(p, width)));
        std::complex<double> sum = 0.0;
        for (std::int64_t v = 1; v < residues; ++v) {
          if (v % p == 0) continue;
          sum += character(PAdicScalar::from_fraction(p, -v, m - k));
        }
        character_mean = sum.real() / static_cast<double>(residues);
      }
      total -= resolvent * k_on_sphere * character_mean;
    }
  }
  return total;
}

inline double laplace_F(double s, const ModelParams& params) {
  const double g = laplace_G(s, params);
  return g / (1.0 + g);
}

// Closed-form first-return density. With G(s) = 1^T (sI + Lambda)^{-1} a,
// F = G / (1 + G) is realized by A = -Lambda - a 1^T, so f(t) = 1^T e^{At} a.
class ReturnDensity {
 public:
  explicit ReturnDensity(const ExponentialModeSum& g) {
    const auto modes = g.modes();
    const auto d = static_cast<Eigen::Index>(modes.size());
    a_ = Eigen::VectorXd(d);
    generator_ = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      a_(i) = modes[static_cast<std::size_t>(i)].amplitude;
      generator_(i, i) = -modes[static_cast<std::size_t>(i)].rate;
    }
    generator_ -= a_ * Eigen::RowVectorXd::Ones(d);
  }

  explicit ReturnDensity(const ModelParams& params) : ReturnDensity(g_modes(params)) {}

  double density(double t) const {
    if (a_.size() == 0 || t < 0) return 0.0;
    const Eigen::MatrixXd e = (generator_ * t).exp();
    return (e.colwise().sum() * a_)(0, 0);
  }

  // int_0^t f via the augmented generator [[A, a], [0, 0]].
  double cdf(double t) const {
    if (a_.size() == 0 || t <= 0) return 0.0;
    const Eigen::Index d = a_.size();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(d + 1, d + 1);
    aug.topLeftCorner(d, d) = generator_ * t;
    aug.topRightCorner(d, 1) = a_ * t;
    const Eigen::MatrixXd e = aug.exp();
    return e.topRightCorner(d, 1).sum();
  }

 private:
  Eigen::VectorXd a_;
  Eigen::MatrixXd generator_;
};

struct LaplaceRow {
  double s;
  double G;
  double F;
  double sG;
};

struct RecurrenceReport {
  ModelParams params;
  std::vector<LaplaceRow> rows;
  double C = 0.0;
  double residue = 0.0;  // lim s G(s) = C p^r
  double mean_return_time = 0.0;
  std::optional<double> monte_carlo_mean;
  bool recurrent = false;

  std::string verdict() const { return recurrent ? "recurrent" : "transient"; }
};

inline constexpr double kResidueTolerance = 1e-4;
inline constexpr double kMeanReturnS = 1e-6;

// Tabulates G and F on a decreasing s grid. Recurrent when the rate-0 residue
// of G is positive and s G(s) at the smallest s matches it, so G(0+) = inf and
// F(0+) = 1. Otherwise F(0+) = G(0)/(1 + G(0)) < 1.
inline RecurrenceReport recurrence_report(const ModelParams& params, const std::vector<double>& s_grid,
                                          std::optional<double> monte_carlo_mean = std::nullopt) {
  require_annulus(params);
  if (s_grid.empty()) throw parameter_error("s grid must be nonempty");
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    require_positive_s(s_grid[i]);
    if (i > 0 && !(s_grid[i] < s_grid[i - 1])) throw parameter_error("s grid must be strictly decreasing");
  }
  RecurrenceReport report;
  report.params = params;
  report.C = kernel_C(params);
  const auto g = g_modes(params);
  report.residue = g.stationary_amplitude();
  for (double s : s_grid) {
    const double G = g.laplace(s);
    report.rows.push_back({s, G, G / (1.0 + G), s * G});
  }
  const double last_sG = report.rows.back().sG;
  report.recurrent = report.residue > 0 && std::abs(last_sG - report.residue) <= kResidueTolerance;
  const double G = g.laplace(kMeanReturnS);
  report.mean_return_time = (1.0 - G / (1.0 + G)) / kMeanReturnS;
  report.monte_carlo_mean = monte_carlo_mean;
  return report;
}

inline std::vector<double> default_s_grid() {
  std::vector<double> grid;
  for (int k = 1; k >= -6; --k) grid.push_back(std::pow(10.0, k));
  return grid;
}

}  // namespace padiff
