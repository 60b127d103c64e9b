#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "padiff/padic.hpp"
#include "padiff/schwartz.hpp"

namespace padiff {

// (p, r, alpha) for the operator with symbol max{|xi|_p, p^r}^alpha - p^{r alpha}.
struct ModelParams {
  unsigned p = 2;
  int r = -1;
  double alpha = 1.0;

  void validate() const {
    validate_prime(p);
    if (!std::isfinite(alpha)) throw parameter_error("alpha must be a finite real number");
  }

  std::string describe() const {
    return "p=" + std::to_string(p) + " r=" + std::to_string(r) + " alpha=" + std::to_string(alpha);
  }
};

inline void require_positive_alpha(const ModelParams& params) {
  params.validate();
  if (!(params.alpha > 0)) throw parameter_error("alpha > 0 required, got " + std::to_string(params.alpha));
}

// The annulus 1 < |y|_p <= p^{-r} is empty unless r < 0.
inline void require_annulus(const ModelParams& params) {
  require_positive_alpha(params);
  if (params.r >= 0) {
    throw parameter_error("empty annulus: r < 0 required, got r=" + std::to_string(params.r));
  }
}

// Symbol value on the sphere |xi|_p = p^m. Exactly zero for m <= r.
inline double decay_rate(int m, const ModelParams& params) {
  if (m <= params.r) return 0.0;
  return std::pow(static_cast<double>(params.p), m * params.alpha) -
         std::pow(static_cast<double>(params.p), params.r * params.alpha);
}

// <xi>^alpha - p^{r alpha} for |xi|_p = p^{-valuation}.
inline double symbol(int valuation, const ModelParams& params) {
  require_positive_alpha(params);
  if (valuation == kInfiniteValuation) return 0.0;
  return decay_rate(-valuation, params);
}

inline double symbol(const PAdicScalar& xi, const ModelParams& params) { return symbol(xi.valuation(), params); }

// K_alpha on the sphere |y|_p = p^{-valuation}, supported on |y|_p <= p^{-r}.
// Defined for alpha > 0 and for the real logarithmic case alpha = -1.
inline double kernel_K(int valuation, const ModelParams& params) {
  params.validate();
  if (valuation == kInfiniteValuation) throw domain_error("kernel_K is singular at y = 0");
  if (!(params.alpha > 0) && params.alpha != -1.0) {
    throw parameter_error("kernel_K requires alpha > 0 or alpha = -1, got " + std::to_string(params.alpha));
  }
  if (-valuation > -params.r) return 0.0;
  const double p = params.p;
  if (params.alpha == -1.0) {
    // log_p |y|_p = -valuation
    return (1.0 - 1.0 / p) * ((1.0 - params.r) + valuation);
  }
  const double a = params.alpha;
  const double pa = std::pow(p, a);
  const double singular = (1.0 - pa) / (1.0 - std::pow(p, -a - 1.0)) * std::pow(p, valuation * (a + 1.0));
  const double constant = std::pow(p, params.r * (a + 1.0)) * (1.0 - pa) / (1.0 - std::pow(p, a + 1.0));
  return singular + constant;
}

inline double kernel_K(const PAdicScalar& y, const ModelParams& params) { return kernel_K(y.valuation(), params); }

// C = -int_{1 < |y|_p <= p^{-r}} K_alpha(y) dy as a finite shell sum.
inline double kernel_C(const ModelParams& params) {
  require_annulus(params);
  const double p = params.p;
  double c = 0.0;
  for (int j = 1; j <= -params.r; ++j) c -= kernel_K(-j, params) * std::pow(p, j) * (1.0 - 1.0 / p);
  return c;
}

// H^alpha f(x) through the Fourier multiplier: each term c 1_{B_gamma(a)}
// contributes c p^gamma sum_{m=r+1}^{-gamma} (p^{m alpha} - p^{r alpha})
// * int_{|xi|=p^m} chi(-(x-a) xi) dxi.
inline Complex apply_H_multiplier(const TestFunction& f, const PAdicScalar& x, const ModelParams& params) {
  require_positive_alpha(params);
  Complex sum = 0.0;
  for (const auto& t : f.terms()) {
    const int gamma = t.ball.radius_exponent;
    const int v = (x - t.ball.center).valuation();
    double shells = 0.0;
    for (int m = params.r + 1; m <= -gamma; ++m) shells += decay_rate(m, params) * shell_character_integral(m, v, params.p);
    sum += t.coefficient * t.ball.volume() * shells;
  }
  return sum;
}

// H^alpha f(x) through the integral representation
//   (1-p^a)/(1-p^{a+1}) [ p^{r(a+1)} int (f(x-y)-f(x)) dy - p^{a+1} int (f(x-y)-f(x)) |y|^{-a-1} dy ]
// over |y|_p <= p^{-r}. The differences vanish for |y|_p <= p^l (l the
// exponent of local constancy); each remaining shell is split into cosets of
// B_l on which f(x - .) is constant.
inline Complex apply_H_integral(const TestFunction& f, const PAdicScalar& x, const ModelParams& params) {
  require_positive_alpha(params);
  if (f.empty()) return 0.0;
  const unsigned p = params.p;
  const double a = params.alpha;
  const int l = f.local_constancy_exponent();
  const int precision = x.precision();
  const Complex fx = evaluate(f, x);
  const double coset_volume = ipow(p, l);

  Complex plain = 0.0;
  Complex weighted = 0.0;
  for (int j = l + 1; j <= -params.r; ++j) {
    // y = p^{-j} (d_0 + d_1 p + ... ), digits at positions -j .. -l-1, d_0 != 0.
    std::vector<std::uint32_t> digits(static_cast<std::size_t>(j - l), 0);
    digits[0] = 1;
    Complex shell_sum = 0.0;
    while (true) {
      const auto y = PAdicScalar::from_digits(p, -j, digits, precision);
      shell_sum += evaluate(f, x - y) - fx;
      std::size_t k = 0;
      while (k < digits.size()) {
        if (++digits[k] < p) break;
        digits[k] = k == 0 ? 1 : 0;
        ++k;
      }
      if (k == digits.size()) break;
    }
    shell_sum *= coset_volume;
    plain += shell_sum;
    weighted += shell_sum * std::pow(static_cast<double>(p), -j * (a + 1.0));
  }
  const double pa = std::pow(static_cast<double>(p), a);
  const double prefactor = (1.0 - pa) / (1.0 - pa * p);
  return prefactor * (std::pow(static_cast<double>(p), params.r * (a + 1.0)) * plain - pa * p * weighted);
}

}  // namespace padiff
