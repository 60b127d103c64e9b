#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "padiff/padic.hpp"
#include "padiff/pseudodiff.hpp"
#include "padiff/schwartz.hpp"

namespace padiff {

struct Mode {
  double amplitude;
  double rate;
};

// sum_m a_m exp(-lambda_m t) with distinct rates sorted ascending and no zero
// amplitudes. Every time-dependent analytic quantity is carried in this form.
class ExponentialModeSum {
 public:
  ExponentialModeSum() = default;

  explicit ExponentialModeSum(std::vector<Mode> modes) {
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.rate < b.rate; });
    for (const auto& m : modes) {
      if (m.rate < 0) throw parameter_error("mode rates must be nonnegative");
      if (!modes_.empty() && modes_.back().rate == m.rate) {
        modes_.back().amplitude += m.amplitude;
      } else {
        modes_.push_back(m);
      }
    }
    std::erase_if(modes_, [](const Mode& m) { return m.amplitude == 0.0; });
  }

  std::span<const Mode> modes() const noexcept { return modes_; }
  bool empty() const noexcept { return modes_.empty(); }

  double operator()(double t) const {
    double sum = 0.0;
    for (const auto& m : modes_) sum += m.rate == 0.0 ? m.amplitude : m.amplitude * std::exp(-m.rate * t);
    return sum;
  }

  ExponentialModeSum derivative() const {
    std::vector<Mode> out;
    for (const auto& m : modes_) out.push_back({-m.amplitude * m.rate, m.rate});
    return ExponentialModeSum(std::move(out));
  }

  // Laplace transform sum_m a_m / (s + lambda_m).
  double laplace(double s) const {
    double sum = 0.0;
    for (const auto& m : modes_) sum += m.amplitude / (s + m.rate);
    return sum;
  }

  // Amplitude of the rate-0 mode, the t -> infinity limit.
  double stationary_amplitude() const {
    return !modes_.empty() && modes_.front().rate == 0.0 ? modes_.front().amplitude : 0.0;
  }

  friend ExponentialModeSum operator+(const ExponentialModeSum& a, const ExponentialModeSum& b) {
    std::vector<Mode> all(a.modes_.begin(), a.modes_.end());
    all.insert(all.end(), b.modes_.begin(), b.modes_.end());
    return ExponentialModeSum(std::move(all));
  }

  friend ExponentialModeSum operator*(double s, const ExponentialModeSum& a) {
    std::vector<Mode> out;
    for (const auto& m : a.modes_) out.push_back({s * m.amplitude, m.rate});
    return ExponentialModeSum(std::move(out));
  }

  friend ExponentialModeSum operator-(const ExponentialModeSum& a, const ExponentialModeSum& b) {
    return a + (-1.0) * b;
  }

 private:
  std::vector<Mode> modes_;
};

// Haar measure of the sphere |x|_p = p^{-n}.
inline double sphere_volume(int n, unsigned p) { return ipow(p, -n) * (1.0 - 1.0 / p); }

namespace detail {

inline void require_positive_time(double t) {
  if (!(t > 0)) throw domain_error("t > 0 required, got " + std::to_string(t));
}

}  // namespace detail

// Z_r(x, t) for |x|_p = p^{-n} (n = kInfiniteValuation for x = 0):
//   p^r + sum_{m=r+1}^{n} (1-1/p) p^m e^{-t lambda_m} - p^n e^{-t lambda_{n+1}},
// zero for n < r. The x = 0 series and very small x stop once terms fall
// below 1e-16 of the partial sum on the decreasing side.
inline double heat_kernel(int n, double t, const ModelParams& params) {
  require_positive_alpha(params);
  detail::require_positive_time(t);
  const int r = params.r;
  if (n < r) return 0.0;
  const double log_p = std::log(static_cast<double>(params.p));
  const double shell = 1.0 - 1.0 / params.p;
  double z = ipow(params.p, r);
  double previous = 0.0;
  for (int m = r + 1; m <= n; ++m) {
    const double term = shell * std::exp(m * log_p - t * decay_rate(m, params));
    z += term;
    // Terms are unimodal in m; past the peak the remainder, boundary term
    // included, is below double resolution.
    if (m > r + 1 && term <= previous && term < 1e-16 * z) return z;
    previous = term;
    if (m == INT_MAX - 1) break;
  }
  return z - std::exp(n * log_p - t * decay_rate(n + 1, params));
}

inline double heat_kernel(const PAdicScalar& x, double t, const ModelParams& params) {
  return heat_kernel(x.valuation(), t, params);
}

// (F * G)(x) for radial F, G vanishing outside |y|_p <= p^{-r}, each given as a
// function of the valuation, at |x|_p = p^{-n} (n = kInfiniteValuation for 0).
// Shells past valuation `cutoff` are dropped. On |y| = |x| the sphere splits
// into the spheres |x - y| = p^{-k}, k > n, and a remainder of measure
// p^{-n}(1 - 2/p) where |x - y| = |x|.
template <class F, class G>
double radial_convolution(const F& f, const G& g, int n, int r, unsigned p, int cutoff) {
  double total = 0.0;
  if (n == kInfiniteValuation) {
    for (int k = r; k <= cutoff; ++k) total += f(k) * g(k) * sphere_volume(k, p);
    return total;
  }
  // |x| > p^{-r}: every y in the support of G puts x - y outside that of F.
  if (n < r) return 0.0;
  for (int k = r; k < n; ++k) total += f(k) * g(k) * sphere_volume(k, p);
  for (int k = n + 1; k <= cutoff; ++k) total += (f(n) * g(k) + f(k) * g(n)) * sphere_volume(k, p);
  total += f(n) * g(n) * ipow(p, -n) * (1.0 - 2.0 / p);
  return total;
}

// P(|W|_p <= p^gamma) for W with density Z_r(., t), through the Fourier side:
// p^gamma * int_{|xi| <= p^{-gamma}} e^{-t symbol} dxi, a finite sum. t = 0
// gives 1 (point mass at the origin).
inline double heat_ball_mass(int gamma, double t, const ModelParams& params) {
  require_positive_alpha(params);
  const unsigned p = params.p;
  const int r = params.r;
  if (-gamma <= r) return 1.0;
  double inner = ipow(p, r);
  for (int m = r + 1; m <= -gamma; ++m) inner += (1.0 - 1.0 / p) * ipow(p, m) * std::exp(-t * decay_rate(m, params));
  return std::min(1.0, ipow(p, gamma) * inner);
}

// Total mass of Z_r(., t) summed shell by shell in x-space. The remainder past
// shell N is bounded by Z_r(0, t) p^{-N-1}.
inline double heat_mass(double t, const ModelParams& params) {
  const double peak = heat_kernel(kInfiniteValuation, t, params);
  double mass = 0.0;
  for (int n = params.r;; ++n) {
    mass += heat_kernel(n, t, params) * sphere_volume(n, params.p);
    if (peak * ipow(params.p, -n - 1) < 1e-18) break;
  }
  return mass;
}

// Probability that an increment of duration t lands on the sphere |W|_p = p^{-n}.
inline double increment_shell_probability(int n, double t, const ModelParams& params) {
  return heat_kernel(n, t, params) * sphere_volume(n, params.p);
}

// u(x, t) = (Z_r(., t) * Omega)(x) for |x|_p = p^{-n}:
//   ball term p^r 1{n >= r} at rate 0 plus shells m = r+1..0 at rate lambda_m.
// For r >= 0 the symbol vanishes on the support of F[Omega] and u = Omega.
inline ExponentialModeSum u_modes(int n, const ModelParams& params) {
  require_positive_alpha(params);
  const unsigned p = params.p;
  if (params.r >= 0) return ExponentialModeSum({{ball_character_integral(0, n, p), 0.0}});
  std::vector<Mode> modes;
  modes.push_back({ball_character_integral(params.r, n, p), 0.0});
  for (int m = params.r + 1; m <= 0; ++m) modes.push_back({shell_character_integral(m, n, p), decay_rate(m, params)});
  return ExponentialModeSum(std::move(modes));
}

inline double u_value(int n, double t, const ModelParams& params) { return u_modes(n, params)(t); }

inline double u_dt(int n, double t, const ModelParams& params) {
  if (t < 0) throw domain_error("t >= 0 required, got " + std::to_string(t));
  return u_modes(n, params).derivative()(t);
}

// S(t) = int_{|x|_p <= 1} u(x, t) dx. u is constant on the unit ball, which
// has volume 1, so S(t) = u(0, t).
inline ExponentialModeSum survival_S_modes(const ModelParams& params) { return u_modes(0, params); }

// u(., t) written as a test function: one value on B_0 and one per sphere
// 1 < |x|_p <= p^{-r}; zero outside B_{-r}.
inline TestFunction u_as_test_function(double t, const ModelParams& params, int precision = kDefaultPrecision) {
  const unsigned p = params.p;
  TestFunction f(p);
  f.add(u_value(0, t, params), Ball::around_zero(p, 0, precision));
  for (int k = 1; k <= -params.r; ++k) {
    const double value = u_value(-k, t, params);
    f.add(value, Ball::around_zero(p, k, precision));
    f.add(-value, Ball::around_zero(p, k - 1, precision));
  }
  return f;
}

// P(t, x, B) = int_B Z_r(x - y, t) dy. With B = B_gamma(a) and b = a - x:
// if |b| <= p^gamma the set B - x is the ball B_gamma(0) and the mass is
// 1 minus the finitely many shells outside it; otherwise B - x lies on the
// sphere |z| = |b| where Z_r is constant.
inline double transition_P(double t, const PAdicScalar& x, const Ball& B, const ModelParams& params) {
  require_positive_alpha(params);
  if (t < 0) throw domain_error("t >= 0 required, got " + std::to_string(t));
  if (t == 0) return B.contains(x) ? 1.0 : 0.0;
  const int gamma = B.radius_exponent;
  const PAdicScalar b = B.center - x;
  if (b.is_zero() || b.valuation() >= -gamma) {
    double outside = 0.0;
    for (int n = params.r; n < -gamma; ++n) outside += increment_shell_probability(n, t, params);
    return std::clamp(1.0 - outside, 0.0, 1.0);
  }
  return std::clamp(heat_kernel(b.valuation(), t, params) * B.volume(), 0.0, 1.0);
}

}  // namespace padiff
