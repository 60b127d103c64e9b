#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls the closed forms it is used to check.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "padiff/heat.hpp"
#include "padiff/padic.hpp"
#include "padiff/rng.hpp"
#include "padiff/schwartz.hpp"

namespace oracle {

using padiff::PAdicScalar;

inline std::int64_t int_pow(std::int64_t base, int exp) {
  std::int64_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// int_{|xi|_p = p^m} chi(-x xi) dxi as a sum over the residues u mod p^K of
// xi = p^{-m} u, K large enough that the character is constant on each coset.
inline double coset_shell_integral(int m, const PAdicScalar& x) {
  const unsigned p = x.prime();
  const int K = x.is_zero() ? 1 : std::max(1, m - x.valuation() + 1);
  const std::int64_t count = int_pow(p, K);
  if (count > 2'000'000) throw std::runtime_error("coset oracle too large");
  std::complex<double> sum = 0.0;
  for (std::int64_t u = 1; u < count; ++u) {
    if (u % p == 0) continue;
    const auto xi = PAdicScalar::from_fraction(p, u, -m, x.precision());
    sum += padiff::character(-(x * xi));
  }
  return sum.real() * std::pow(static_cast<double>(p), m) / static_cast<double>(count);
}

inline double coset_ball_integral(int m, const PAdicScalar& x) {
  const unsigned p = x.prime();
  const int K = x.is_zero() ? 0 : std::max(0, m - x.valuation());
  const std::int64_t count = int_pow(p, K);
  if (count > 2'000'000) throw std::runtime_error("coset oracle too large");
  std::complex<double> sum = 0.0;
  for (std::int64_t u = 0; u < count; ++u) {
    const auto xi = PAdicScalar::from_fraction(p, u, -m, x.precision());
    sum += padiff::character(-(x * xi));
  }
  return sum.real() * std::pow(static_cast<double>(p), m) / static_cast<double>(count);
}

// Exact fractions for kernel values at integer alpha.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Fraction(std::int64_t n = 0, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Fraction operator+(Fraction a, Fraction b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Fraction operator-(Fraction a, Fraction b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
  friend Fraction operator*(Fraction a, Fraction b) { return {a.num * b.num, a.den * b.den}; }
  friend Fraction operator/(Fraction a, Fraction b) { return {a.num * b.den, a.den * b.num}; }
  friend bool operator==(Fraction a, Fraction b) { return a.num == b.num && a.den == b.den; }
};

inline Fraction fraction_pow(std::int64_t p, int k) {
  return k >= 0 ? Fraction(int_pow(p, k)) : Fraction(1, int_pow(p, -k));
}

// K_alpha on |y|_p = p^j, j <= -r, for a positive integer alpha.
inline Fraction kernel_fraction(std::int64_t p, int r, int alpha, int j) {
  const Fraction one(1);
  const Fraction pa = fraction_pow(p, alpha);
  const Fraction first = (one - pa) / (one - fraction_pow(p, -alpha - 1)) * fraction_pow(p, -j * (alpha + 1));
  const Fraction second = fraction_pow(p, r * (alpha + 1)) * (one - pa) / (one - fraction_pow(p, alpha + 1));
  return first + second;
}

// C = -int_{1<|y|<=p^{-r}} K dy by the midpoint rule on [0, 1) after the
// substitution y = p^r z, z in Z_p, and the Monna map z -> sum_j z_j p^{-j-1},
// which carries Haar measure on Z_p to Lebesgue measure. |z|_p = p^{-k} exactly
// on [p^{-k-1}, p^{-k}), so the integrand is a step function.
inline double kernel_C_midpoint(const padiff::ModelParams& params, int cells) {
  const double p = params.p;
  double sum = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double w = (i + 0.5) / cells;
    const int k = static_cast<int>(std::floor(-std::log(w) / std::log(p)));  // |z| = p^{-k}
    const int j = -params.r - k;                                             // |y| = p^j
    if (j <= 0) continue;
    sum += padiff::kernel_K(-j, params);
  }
  return -sum / cells * std::pow(p, -params.r);
}

// (Z_t * Z_s)(x) for |x|_p = p^{-n} computed in x-space with radial shells:
// for |y| != |x| the difference has norm max(|x|,|y|); on |y| = |x| the
// sphere splits into spheres around x of radius p^{-k} (k > n) and the
// remaining part where |x - y| = |x|.
inline double radial_convolution(int n, double t, double s, const padiff::ModelParams& params) {
  using padiff::heat_kernel;
  using padiff::sphere_volume;
  const unsigned p = params.p;
  const int r = params.r;
  const double peak_t = heat_kernel(padiff::kInfiniteValuation, t, params);
  const double peak_s = heat_kernel(padiff::kInfiniteValuation, s, params);
  auto stop = [&](int k) { return peak_t * peak_s * std::pow(static_cast<double>(p), -k) < 1e-20; };

  double total = 0.0;
  if (n == padiff::kInfiniteValuation) {
    for (int k = r;; ++k) {
      total += heat_kernel(k, t, params) * heat_kernel(k, s, params) * sphere_volume(k, p);
      if (stop(k)) break;
    }
    return total;
  }
  // |y| > |x|: |x - y| = |y|.
  for (int k = r; k < n; ++k) total += heat_kernel(k, t, params) * heat_kernel(k, s, params) * sphere_volume(k, p);
  // |y| < |x|: |x - y| = |x|.
  for (int k = n + 1;; ++k) {
    total += heat_kernel(n, t, params) * heat_kernel(k, s, params) * sphere_volume(k, p);
    if (stop(k)) break;
  }
  // |y| = |x|: |x - y| = p^{-k} for k > n on a set of measure p^{-k}(1-1/p),
  // and |x - y| = |x| on the rest, of measure p^{-n}(1 - 2/p).
  for (int k = n + 1;; ++k) {
    total += heat_kernel(k, t, params) * heat_kernel(n, s, params) * sphere_volume(k, p);
    if (stop(k)) break;
  }
  total += heat_kernel(n, t, params) * heat_kernel(n, s, params) * std::pow(static_cast<double>(p), -n) * (1.0 - 2.0 / p);
  return total;
}

// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(F&& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Canonical first-return density and CDF for p = 2, r = -1, alpha = 1.
inline double canonical_return_density(double t) { return t / 16.0 * std::exp(-t / 4.0); }
inline double canonical_return_cdf(double t) { return 1.0 - std::exp(-t / 4.0) * (1.0 + t / 4.0); }

// Random p-adic scalar with valuation in [vmin, vmax] and a random number of
// significant digits.
inline PAdicScalar random_scalar(unsigned p, padiff::CounterRng& rng, int vmin, int vmax, int max_digits = 6,
                                 int precision = padiff::kDefaultPrecision) {
  const int v = vmin + static_cast<int>(rng.below(static_cast<std::uint64_t>(vmax - vmin + 1)));
  const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_digits)));
  std::vector<std::uint32_t> digits(static_cast<std::size_t>(len));
  digits[0] = 1 + static_cast<std::uint32_t>(rng.below(p - 1));
  for (std::size_t j = 1; j < digits.size(); ++j) digits[j] = static_cast<std::uint32_t>(rng.below(p));
  return PAdicScalar::from_digits(p, v, digits, precision);
}

// Random test function with up to max_terms terms on balls of radius exponent
// in [gmin, gmax] whose centers have norm at most p^cmax.
inline padiff::TestFunction random_test_function(unsigned p, padiff::CounterRng& rng, int max_terms, int gmin,
                                                 int gmax, int cmax) {
  padiff::TestFunction f(p);
  const int terms = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_terms)));
  for (int i = 0; i < terms; ++i) {
    const int gamma = gmin + static_cast<int>(rng.below(static_cast<std::uint64_t>(gmax - gmin + 1)));
    PAdicScalar center = rng.below(4) == 0 ? PAdicScalar::zero(p) : random_scalar(p, rng, -cmax, 3);
    const std::complex<double> c(static_cast<double>(rng.below(2001)) / 1000.0 - 1.0,
                                 static_cast<double>(rng.below(2001)) / 1000.0 - 1.0);
    f.add(c, padiff::Ball(center, gamma));
  }
  return f;
}

}  // namespace oracle
