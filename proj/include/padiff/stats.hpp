#pragma once

#include <cstddef>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "padiff/heat.hpp"
#include "padiff/process.hpp"

namespace padiff {

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit. Adjacent classes are pooled from the right until
// every pooled expected count is at least 5.
inline ChiSquareResult chi_square_test(const std::vector<std::size_t>& observed, const std::vector<double>& probabilities) {
  if (observed.size() != probabilities.size() || observed.empty()) throw parameter_error("chi-square class mismatch");
  std::size_t n = 0;
  for (auto c : observed) n += c;
  std::vector<double> obs, expct;
  double o = 0.0, e = 0.0;
  for (std::size_t i = observed.size(); i-- > 0;) {
    o += static_cast<double>(observed[i]);
    e += probabilities[i] * static_cast<double>(n);
    if (e >= 5.0) {
      obs.push_back(o);
      expct.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (expct.empty()) throw parameter_error("chi-square: too few samples");
    obs.back() += o;
    expct.back() += e;
  }
  ChiSquareResult out;
  for (std::size_t i = 0; i < obs.size(); ++i) out.statistic += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
  out.degrees_of_freedom = static_cast<int>(obs.size()) - 1;
  if (out.degrees_of_freedom < 1) return out;
  const boost::math::chi_squared dist(out.degrees_of_freedom);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

// Radius classes |X_t|_p = p^{-n}, n = r .. r + classes - 2, plus the ball
// |X_t|_p <= p^{-r-classes+1}, of skeletons started at 0, against
// transition_P(t, 0, .) with t = steps * dt.
inline ChiSquareResult marginal_radius_test(const ModelParams& params, double dt, long steps, std::size_t n_samples,
                                            std::uint64_t seed, unsigned threads = 1, int classes = 24) {
  const auto valuations = sample_marginal_valuations(params, dt, steps, n_samples, seed, threads);
  const double t = dt * static_cast<double>(steps);
  const auto zero = PAdicScalar::zero(params.p);
  auto ball = [&](int n) { return transition_P(t, zero, Ball::around_zero(params.p, -n), params); };

  const auto k = static_cast<std::size_t>(classes);
  std::vector<std::size_t> observed(k, 0);
  std::vector<double> probabilities(k, 0.0);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const int n = params.r + static_cast<int>(i);
    probabilities[i] = ball(n) - ball(n + 1);
  }
  probabilities[k - 1] = ball(params.r + classes - 1);
  for (int v : valuations) {
    if (v < params.r) throw domain_error("skeleton left the support of the transition law");
    const auto cls = v == kInfiniteValuation ? k - 1 : static_cast<std::size_t>(v - params.r);
    observed[std::min(k - 1, cls)] += 1;
  }
  return chi_square_test(observed, probabilities);
}

}  // namespace padiff
