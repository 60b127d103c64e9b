#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "padiff/errors.hpp"
#include "padiff/rng.hpp"

namespace padiff {

// Valuation of the zero element.
inline constexpr int kInfiniteValuation = INT_MAX;

inline constexpr int kDefaultPrecision = 32;

// Primes are limited to 16 bits so digit products and convolution sums stay
// well inside 64-bit accumulators.
inline constexpr unsigned kMaxPrime = 65521;

inline bool is_prime(unsigned n) {
  if (n < 2) return false;
  for (unsigned d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

inline void validate_prime(unsigned p) {
  if (p > kMaxPrime || !is_prime(p)) {
    throw parameter_error("p must be a prime in [2, " + std::to_string(kMaxPrime) + "], got " +
                          std::to_string(p));
  }
}

inline void validate_precision(int precision) {
  if (precision <= 0 || precision > 4096) {
    throw parameter_error("digit precision must be in [1, 4096], got " + std::to_string(precision));
  }
}

// p^k as a double for any integer k.
inline double ipow(unsigned p, int k) { return std::pow(static_cast<double>(p), k); }

// Exact rational with 64-bit numerator and denominator.
struct Rational {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;

  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

// A p-adic number x = p^v * sum_j d_j p^j, retaining at most `precision`
// significant digits. Digits past the stored vector are zero. Zero is stored
// with valuation kInfiniteValuation and no digits; for nonzero values d_0 != 0
// and the last stored digit is nonzero.
class PAdicScalar {
 public:
  explicit PAdicScalar(unsigned p, int precision = kDefaultPrecision)
      : p_(p), valuation_(kInfiniteValuation), precision_(precision) {
    validate_prime(p);
    validate_precision(precision);
  }

  static PAdicScalar zero(unsigned p, int precision = kDefaultPrecision) { return PAdicScalar(p, precision); }

  static PAdicScalar from_integer(unsigned p, std::int64_t value, int precision = kDefaultPrecision) {
    PAdicScalar out(p, precision);
    if (value == 0) return out;
    // Magnitude as unsigned so INT64_MIN is representable.
    std::uint64_t magnitude = value < 0 ? 0 - static_cast<std::uint64_t>(value) : static_cast<std::uint64_t>(value);
    std::vector<std::uint32_t> digits;
    while (magnitude != 0) {
      digits.push_back(static_cast<std::uint32_t>(magnitude % p));
      magnitude /= p;
    }
    out = from_digits(p, 0, std::move(digits), precision);
    return value < 0 ? -out : out;
  }

  // numerator * p^exponent, e.g. 1/2 in Q_2 is from_fraction(2, 1, -1).
  static PAdicScalar from_fraction(unsigned p, std::int64_t numerator, int exponent,
                                   int precision = kDefaultPrecision) {
    return from_integer(p, numerator, precision).shifted(exponent);
  }

  // Builds p^valuation * sum_j digits[j] p^j and normalizes leading and
  // trailing zeros. Digits must lie in [0, p).
  static PAdicScalar from_digits(unsigned p, int valuation, std::vector<std::uint32_t> digits,
                                 int precision = kDefaultPrecision) {
    PAdicScalar out(p, precision);
    auto first = std::find_if(digits.begin(), digits.end(), [](std::uint32_t d) { return d != 0; });
    if (first == digits.end()) return out;
    for (auto d : digits) {
      if (d >= p) throw parameter_error("digit out of range for p=" + std::to_string(p));
    }
    const auto lead = static_cast<int>(first - digits.begin());
    digits.erase(digits.begin(), first);
    if (digits.size() > static_cast<std::size_t>(precision)) digits.resize(precision);
    while (digits.back() == 0) digits.pop_back();
    out.valuation_ = valuation + lead;
    out.digits_ = std::move(digits);
    return out;
  }

  unsigned prime() const noexcept { return p_; }
  int precision() const noexcept { return precision_; }
  int valuation() const noexcept { return valuation_; }
  bool is_zero() const noexcept { return digits_.empty(); }
  std::span<const std::uint32_t> digits() const noexcept { return digits_; }

  // Digit at absolute position `position` (coefficient of p^position).
  std::uint32_t digit_at(int position) const noexcept {
    if (is_zero() || position < valuation_) return 0;
    const auto idx = static_cast<long long>(position) - valuation_;
    return idx < static_cast<long long>(digits_.size()) ? digits_[static_cast<std::size_t>(idx)] : 0;
  }

  double norm() const { return is_zero() ? 0.0 : ipow(p_, -valuation_); }

  // x * p^k.
  PAdicScalar shifted(int k) const {
    PAdicScalar out = *this;
    if (!is_zero()) out.valuation_ += k;
    return out;
  }

  // Drops every digit at absolute position >= position, leaving x mod p^position.
  PAdicScalar truncated_below(int position) const {
    if (is_zero() || position <= valuation_) return zero(p_, precision_);
    std::vector<std::uint32_t> kept(digits_.begin(),
                                    digits_.begin() + std::min<long long>(static_cast<long long>(digits_.size()),
                                                                          static_cast<long long>(position) - valuation_));
    return from_digits(p_, valuation_, std::move(kept), precision_);
  }

  PAdicScalar with_precision(int precision) const {
    if (is_zero()) return zero(p_, precision);
    return from_digits(p_, valuation_, digits_, precision);
  }

  PAdicScalar operator-() const {
    if (is_zero()) return *this;
    std::vector<std::uint32_t> out(static_cast<std::size_t>(precision_));
    out[0] = p_ - digits_[0];
    for (std::size_t j = 1; j < out.size(); ++j) {
      const std::uint32_t d = j < digits_.size() ? digits_[j] : 0;
      out[j] = p_ - 1 - d;
    }
    return from_digits(p_, valuation_, std::move(out), precision_);
  }

  friend PAdicScalar operator+(const PAdicScalar& x, const PAdicScalar& y) {
    check_same_prime(x, y);
    const int precision = std::min(x.precision_, y.precision_);
    if (x.is_zero()) return y.with_precision(precision);
    if (y.is_zero()) return x.with_precision(precision);
    const int low = std::min(x.valuation_, y.valuation_);
    std::vector<std::uint32_t> out(static_cast<std::size_t>(precision));
    std::uint32_t carry = 0;
    for (int i = 0; i < precision; ++i) {
      const std::uint32_t s = x.digit_at(low + i) + y.digit_at(low + i) + carry;
      out[static_cast<std::size_t>(i)] = s % x.p_;
      carry = s / x.p_;
    }
    return from_digits(x.p_, low, std::move(out), precision);
  }

  friend PAdicScalar operator-(const PAdicScalar& x, const PAdicScalar& y) { return x + (-y); }

  friend PAdicScalar operator*(const PAdicScalar& x, const PAdicScalar& y) {
    check_same_prime(x, y);
    const int precision = std::min(x.precision_, y.precision_);
    if (x.is_zero() || y.is_zero()) return zero(x.p_, precision);
    const auto n = static_cast<std::size_t>(precision);
    std::vector<std::uint64_t> acc(n, 0);
    for (std::size_t i = 0; i < x.digits_.size() && i < n; ++i) {
      for (std::size_t j = 0; j < y.digits_.size() && i + j < n; ++j) {
        acc[i + j] += static_cast<std::uint64_t>(x.digits_[i]) * y.digits_[j];
      }
    }
    std::vector<std::uint32_t> out(n);
    std::uint64_t carry = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t s = acc[k] + carry;
      out[k] = static_cast<std::uint32_t>(s % x.p_);
      carry = s / x.p_;
    }
    return from_digits(x.p_, x.valuation_ + y.valuation_, std::move(out), precision);
  }

  friend bool operator==(const PAdicScalar& x, const PAdicScalar& y) {
    return x.p_ == y.p_ && x.valuation_ == y.valuation_ && x.digits_ == y.digits_;
  }

 private:
  static void check_same_prime(const PAdicScalar& x, const PAdicScalar& y) {
    if (x.p_ != y.p_) {
      throw parameter_error("mismatched primes " + std::to_string(x.p_) + " and " + std::to_string(y.p_));
    }
  }

  unsigned p_;
  int valuation_;
  int precision_;
  std::vector<std::uint32_t> digits_;
};

// {x}_p as an exact rational with denominator p^{-ord(x)}; zero when ord(x) >= 0.
// Throws std::overflow_error when the denominator does not fit in 63 bits.
inline Rational fractional_part(const PAdicScalar& x) {
  if (x.is_zero() || x.valuation() >= 0) return {};
  const int k = -x.valuation();
  std::int64_t denominator = 1;
  std::int64_t numerator = 0;
  for (int j = 0; j < k; ++j) {
    // numerator accumulates d_j p^j while denominator reaches p^k.
    std::int64_t term = 0;
    if (__builtin_mul_overflow(static_cast<std::int64_t>(x.digit_at(x.valuation() + j)), denominator, &term) ||
        __builtin_add_overflow(numerator, term, &numerator) ||
        __builtin_mul_overflow(denominator, static_cast<std::int64_t>(x.prime()), &denominator)) {
      throw std::overflow_error("fractional part denominator exceeds 64-bit range");
    }
  }
  return {numerator, denominator};
}

// chi(x) = exp(2 pi i {x}_p).
inline std::complex<double> character(const PAdicScalar& x) {
  if (x.is_zero() || x.valuation() >= 0) return {1.0, 0.0};
  double fraction = 0.0;
  try {
    fraction = fractional_part(x).value();
  } catch (const std::overflow_error&) {
    // Only the top digits matter at double resolution.
    const int k = -x.valuation();
    for (int j = k - 1; j >= 0; --j) {
      const double weight = ipow(x.prime(), j - k);
      if (weight < 1e-22) break;
      fraction += x.digit_at(x.valuation() + j) * weight;
    }
  }
  return std::polar(1.0, 2.0 * std::numbers::pi * fraction);
}

// Integral of chi(-x xi) over the sphere |xi|_p = p^m, for |x|_p = p^{-valuation}.
inline double shell_character_integral(int m, int valuation, unsigned p) {
  if (valuation == kInfiniteValuation || valuation >= m) return ipow(p, m) * (1.0 - 1.0 / p);
  if (valuation == m - 1) return -ipow(p, m - 1);
  return 0.0;
}

inline double shell_character_integral(int m, const PAdicScalar& x) {
  return shell_character_integral(m, x.valuation(), x.prime());
}

// Integral of chi(-x xi) over the ball |xi|_p <= p^m: p^m * 1{|x|_p <= p^{-m}}.
// Equal to the sum of shell integrals for m' <= m; the tail telescopes.
inline double ball_character_integral(int m, int valuation, unsigned p) {
  return (valuation == kInfiniteValuation || valuation >= m) ? ipow(p, m) : 0.0;
}

inline double ball_character_integral(int m, const PAdicScalar& x) {
  return ball_character_integral(m, x.valuation(), x.prime());
}

// Haar-uniform sample on the sphere |x|_p = p^{-n}.
inline PAdicScalar sample_sphere(unsigned p, int n, CounterRng& rng, int precision = kDefaultPrecision) {
  std::vector<std::uint32_t> digits(static_cast<std::size_t>(precision));
  digits[0] = 1 + static_cast<std::uint32_t>(rng.below(p - 1));
  for (std::size_t j = 1; j < digits.size(); ++j) digits[j] = static_cast<std::uint32_t>(rng.below(p));
  return PAdicScalar::from_digits(p, n, std::move(digits), precision);
}

// Haar-uniform sample on the ball |x|_p <= p^gamma, resolved to `precision`
// digits below the radius.
inline PAdicScalar sample_ball(unsigned p, int gamma, CounterRng& rng, int precision = kDefaultPrecision) {
  std::vector<std::uint32_t> digits(static_cast<std::size_t>(precision));
  for (auto& d : digits) d = static_cast<std::uint32_t>(rng.below(p));
  return PAdicScalar::from_digits(p, -gamma, std::move(digits), precision);
}

// The ball {x : |x - center|_p <= p^radius_exponent}.
struct Ball {
  PAdicScalar center;
  int radius_exponent;

  Ball(PAdicScalar c, int gamma) : center(c.truncated_below(-gamma)), radius_exponent(gamma) {}

  static Ball around_zero(unsigned p, int gamma, int precision = kDefaultPrecision) {
    return Ball(PAdicScalar::zero(p, precision), gamma);
  }

  unsigned prime() const noexcept { return center.prime(); }
  double volume() const { return ipow(prime(), radius_exponent); }

  bool contains(const PAdicScalar& x) const {
    const PAdicScalar d = x - center;
    return d.is_zero() || d.valuation() >= -radius_exponent;
  }

  bool contains(const Ball& other) const {
    return other.radius_exponent <= radius_exponent && contains(other.center);
  }

  bool intersects(const Ball& other) const { return contains(other) || other.contains(*this); }

  // The p sub-balls of radius exponent gamma - 1.
  std::vector<Ball> children() const {
    std::vector<Ball> out;
    out.reserve(prime());
    for (unsigned k = 0; k < prime(); ++k) {
      const auto offset = PAdicScalar::from_integer(prime(), k, center.precision()).shifted(-radius_exponent);
      out.emplace_back(center + offset, radius_exponent - 1);
    }
    return out;
  }

  friend bool operator==(const Ball& a, const Ball& b) {
    return a.radius_exponent == b.radius_exponent && a.center == b.center;
  }
};

}  // namespace padiff
