#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include "padiff/padic.hpp"

namespace padiff {

using Complex = std::complex<double>;

struct Term {
  Complex coefficient;
  Ball ball;
};

// Bruhat-Schwartz function: a finite linear combination of ball indicators.
// Terms may overlap; canonicalize() produces the pairwise-disjoint form.
class TestFunction {
 public:
  explicit TestFunction(unsigned p) : p_(p) { validate_prime(p); }

  static TestFunction indicator(const Ball& ball, Complex coefficient = 1.0) {
    TestFunction f(ball.prime());
    f.add(coefficient, ball);
    return f;
  }

  // Omega(|x|_p), the indicator of the unit ball.
  static TestFunction unit_ball(unsigned p, int precision = kDefaultPrecision) {
    return indicator(Ball::around_zero(p, 0, precision));
  }

  TestFunction& add(Complex coefficient, const Ball& ball) {
    if (ball.prime() != p_) throw parameter_error("ball prime does not match test function prime");
    terms_.push_back({coefficient, ball});
    return *this;
  }

  unsigned prime() const noexcept { return p_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  // Largest l with f(x + x') = f(x) for all |x'|_p <= p^l. An empty function
  // is constant everywhere; kInfiniteValuation stands in for "no scale".
  int local_constancy_exponent() const {
    int l = kInfiniteValuation;
    for (const auto& t : terms_) l = std::min(l, t.ball.radius_exponent);
    return l;
  }

  friend TestFunction operator+(TestFunction a, const TestFunction& b) {
    if (a.p_ != b.p_) throw parameter_error("mismatched primes in test function sum");
    a.terms_.insert(a.terms_.end(), b.terms_.begin(), b.terms_.end());
    return a;
  }

  friend TestFunction operator*(Complex s, TestFunction f) {
    for (auto& t : f.terms_) t.coefficient *= s;
    return f;
  }

 private:
  unsigned p_;
  std::vector<Term> terms_;
};

inline Complex evaluate(const TestFunction& f, const PAdicScalar& x) {
  Complex sum = 0.0;
  for (const auto& t : f.terms()) {
    if (t.ball.contains(x)) sum += t.coefficient;
  }
  return sum;
}

// (F f)(xi) = sum_k c_k p^{gamma_k} chi(a_k xi) 1{|xi|_p <= p^{-gamma_k}}.
inline Complex fourier_eval(const TestFunction& f, const PAdicScalar& xi) {
  Complex sum = 0.0;
  for (const auto& t : f.terms()) {
    const int gamma = t.ball.radius_exponent;
    if (!xi.is_zero() && xi.valuation() < gamma) continue;
    sum += t.coefficient * t.ball.volume() * character(t.ball.center * xi);
  }
  return sum;
}

inline bool is_disjoint(const TestFunction& f) {
  const auto& terms = f.terms();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t j = i + 1; j < terms.size(); ++j) {
      if (terms[i].ball.intersects(terms[j].ball)) return false;
    }
  }
  return true;
}

namespace detail {

inline bool ball_less(const Ball& a, const Ball& b) {
  if (a.radius_exponent != b.radius_exponent) return a.radius_exponent < b.radius_exponent;
  if (a.center.valuation() != b.center.valuation()) return a.center.valuation() < b.center.valuation();
  const auto da = a.center.digits();
  const auto db = b.center.digits();
  return std::lexicographical_compare(da.begin(), da.end(), db.begin(), db.end());
}

}  // namespace detail

// Rewrites f with pairwise-disjoint balls. A ball that strictly contains
// another is split into its p children until only equal or disjoint balls
// remain; equal balls are merged. Already-disjoint input is returned as is.
inline TestFunction canonicalize(const TestFunction& f) {
  if (is_disjoint(f)) return f;
  std::vector<Term> work = f.terms();
  bool split = true;
  while (split) {
    split = false;
    for (std::size_t i = 0; i < work.size() && !split; ++i) {
      for (std::size_t j = 0; j < work.size(); ++j) {
        if (i == j) continue;
        const Ball& outer = work[i].ball;
        const Ball& inner = work[j].ball;
        if (outer.radius_exponent > inner.radius_exponent && outer.contains(inner)) {
          const Term parent = work[i];
          work.erase(work.begin() + static_cast<std::ptrdiff_t>(i));
          for (const auto& child : parent.ball.children()) work.push_back({parent.coefficient, child});
          split = true;
          break;
        }
      }
    }
  }
  std::sort(work.begin(), work.end(), [](const Term& a, const Term& b) { return detail::ball_less(a.ball, b.ball); });
  std::vector<Term> merged;
  for (const auto& t : work) {
    if (!merged.empty() && merged.back().ball == t.ball) {
      merged.back().coefficient += t.coefficient;
    } else {
      merged.push_back(t);
    }
  }
  TestFunction out(f.prime());
  for (const auto& t : merged) out.add(t.coefficient, t.ball);
  return out;
}

// Fourier transform as a test function. Each term c 1_{B_gamma(a)} maps to
// c p^gamma chi(a xi) on |xi| <= p^{-gamma}; the character is constant on
// cosets of radius |a|_p^{-1}, so the ball is split into those cosets.
// Throws parameter_error when the split would exceed `max_cosets` pieces.
inline TestFunction fourier_transform(const TestFunction& f, std::size_t max_cosets = 1u << 20) {
  const unsigned p = f.prime();
  TestFunction out(p);
  for (const auto& t : f.terms()) {
    const int gamma = t.ball.radius_exponent;
    const PAdicScalar& a = t.ball.center;
    const int precision = a.precision();
    const Complex scale = t.coefficient * t.ball.volume();
    if (a.is_zero() || a.valuation() >= -gamma) {
      out.add(scale, Ball::around_zero(p, -gamma, precision));
      continue;
    }
    // Cosets of B_{v(a)} inside B_{-gamma}: digits at positions gamma .. -v(a)-1.
    const int count_digits = -a.valuation() - gamma;
    double pieces = std::pow(static_cast<double>(p), count_digits);
    if (pieces > static_cast<double>(max_cosets)) throw parameter_error("fourier_transform: too many cosets");
    std::vector<std::uint32_t> digits(static_cast<std::size_t>(count_digits), 0);
    while (true) {
      const auto rep = PAdicScalar::from_digits(p, gamma, digits, precision);
      out.add(scale * character(a * rep), Ball(rep, a.valuation()));
      std::size_t k = 0;
      while (k < digits.size() && ++digits[k] == p) digits[k++] = 0;
      if (k == digits.size()) break;
    }
  }
  return out;
}

// Integral of |f|^2 from the disjoint form.
inline double l2_norm_squared(const TestFunction& f) {
  double sum = 0.0;
  const TestFunction disjoint = canonicalize(f);
  for (const auto& t : disjoint.terms()) sum += std::norm(t.coefficient) * t.ball.volume();
  return sum;
}

// Integral of |F f|^2 from pairwise ball integrals of the characters:
// sum_{k,l} c_k conj(c_l) p^{g_k + g_l} * int_{|xi| <= p^{-max(g_k,g_l)}} chi(xi (a_k - a_l)) dxi.
inline double fourier_l2_norm_squared(const TestFunction& f) {
  Complex sum = 0.0;
  const auto& terms = f.terms();
  for (const auto& s : terms) {
    for (const auto& t : terms) {
      const int gmax = std::max(s.ball.radius_exponent, t.ball.radius_exponent);
      const auto diff = s.ball.center - t.ball.center;
      sum += s.coefficient * std::conj(t.coefficient) * s.ball.volume() * t.ball.volume() *
             ball_character_integral(-gmax, diff);
    }
  }
  return sum.real();
}

}  // namespace padiff
