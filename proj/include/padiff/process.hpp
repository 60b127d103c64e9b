#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "padiff/heat.hpp"
#include "padiff/padic.hpp"
#include "padiff/pseudodiff.hpp"
#include "padiff/rng.hpp"

namespace padiff {

// Exact sampler for increments W with density Z_r(., dt). The radius is drawn
// by inverse CDF on the tail masses P(|W|_p <= p^{-n-1}), tabulated until they
// drop below 2^-60 and computed on demand past that; the direction is uniform
// on the sphere.
class IncrementSampler {
 public:
  IncrementSampler(const ModelParams& params, double dt, int precision = kDefaultPrecision)
      : params_(params), dt_(dt), precision_(precision) {
    require_positive_alpha(params);
    validate_precision(precision);
    if (!(dt > 0)) throw domain_error("time step must be positive");
    for (int n = params.r;; ++n) {
      tail_.push_back(tail_after(n));
      if (tail_.back() < 0x1.0p-60) break;
    }
  }

  const ModelParams& params() const noexcept { return params_; }
  double dt() const noexcept { return dt_; }
  int precision() const noexcept { return precision_; }

  // P(|W|_p <= p^{-n-1}).
  double tail_after(int n) const { return heat_ball_mass(-n - 1, dt_, params_); }

  // P(|W|_p = p^{-n}) from consecutive tail masses.
  double shell_probability(int n) const {
    if (n < params_.r) return 0.0;
    const double above = n == params_.r ? 1.0 : tail_at(n - 1);
    return above - tail_at(n);
  }

  int sample_valuation(CounterRng& rng) const {
    const double v = rng.uniform_positive();
    int n = params_.r;
    while (tail_at(n) >= v) ++n;
    return n;
  }

  PAdicScalar sample(CounterRng& rng) const {
    return sample_sphere(params_.p, sample_valuation(rng), rng, precision_);
  }

 private:
  double tail_at(int n) const {
    const auto idx = static_cast<std::size_t>(n - params_.r);
    return idx < tail_.size() ? tail_[idx] : tail_after(n);
  }

  ModelParams params_;
  double dt_;
  int precision_;
  std::vector<double> tail_;
};

inline PAdicScalar sample_increment(double dt, const ModelParams& params, CounterRng& rng,
                                    int precision = kDefaultPrecision) {
  return IncrementSampler(params, dt, precision).sample(rng);
}

// Grid skeleton X_0, ..., X_M of the process at times k dt.
struct PathRecord {
  ModelParams params;
  double dt;
  std::vector<PAdicScalar> states;
  std::uint64_t seed;

  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

inline long steps_for(double dt, double horizon) {
  if (!(dt > 0)) throw domain_error("time step must be positive");
  if (horizon < dt) throw parameter_error("horizon must be at least one time step");
  return static_cast<long>(std::floor(horizon / dt * (1.0 + 1e-12)));
}

inline bool in_unit_ball(const PAdicScalar& x) { return x.is_zero() || x.valuation() >= 0; }

// Increments are drawn from `rng`; x0 is taken as given.
inline PathRecord simulate_path(double dt, double horizon, const PAdicScalar& x0, const ModelParams& params,
                                CounterRng& rng) {
  const long steps = steps_for(dt, horizon);
  const IncrementSampler sampler(params, dt, x0.precision());
  PathRecord path{params, dt, {}, rng.key()};
  path.states.reserve(static_cast<std::size_t>(steps) + 1);
  path.states.push_back(x0);
  for (long k = 0; k < steps; ++k) path.states.push_back(path.states.back() + sampler.sample(rng));
  return path;
}

inline PathRecord simulate_path(double dt, double horizon, const PAdicScalar& x0, const ModelParams& params,
                                std::uint64_t seed) {
  CounterRng rng(seed);
  return simulate_path(dt, horizon, x0, params, rng);
}

struct FirstReturn {
  enum class Outcome { returned, never_exited, no_reentry };
  Outcome outcome;
  double time;  // meaningful only when returned

  bool censored() const noexcept { return outcome != Outcome::returned; }
};

// Streaming return detection over grid indices: the first index after an exit
// from B_0 at which the state is back in B_0.
class ReturnDetector {
 public:
  // Returns true once the return has been seen.
  bool observe(long step, bool inside) {
    if (returned_ >= 0) return true;
    if (!inside) {
      exited_ = true;
    } else if (exited_) {
      returned_ = step;
      return true;
    }
    return false;
  }

  FirstReturn result(double dt) const {
    if (returned_ >= 0) return {FirstReturn::Outcome::returned, static_cast<double>(returned_) * dt};
    return {exited_ ? FirstReturn::Outcome::no_reentry : FirstReturn::Outcome::never_exited, 0.0};
  }

 private:
  bool exited_ = false;
  long returned_ = -1;
};

inline FirstReturn first_return_time(const PathRecord& path) {
  if (path.states.empty() || !in_unit_ball(path.states.front())) {
    throw parameter_error("first_return_time: path must start in the unit ball");
  }
  ReturnDetector detector;
  for (std::size_t k = 1; k < path.states.size(); ++k) {
    if (detector.observe(static_cast<long>(k), in_unit_ball(path.states[k]))) break;
  }
  return detector.result(path.dt);
}

// First-return samples of a Monte Carlo run. Censored paths are split into
// those that never left B_0 and those that left without re-entering.
struct EmpiricalDistribution {
  std::vector<double> samples;  // sorted ascending
  std::size_t n_paths = 0;
  std::size_t never_exited = 0;
  std::size_t no_reentry = 0;
  double horizon = 0.0;

  std::size_t censored() const noexcept { return never_exited + no_reentry; }
  double censored_fraction() const { return n_paths == 0 ? 0.0 : static_cast<double>(censored()) / n_paths; }

  double cdf(double t) const {
    if (n_paths == 0) return 0.0;
    const auto it = std::upper_bound(samples.begin(), samples.end(), t);
    return static_cast<double>(it - samples.begin()) / n_paths;
  }

  double mean() const {
    if (samples.empty()) return 0.0;
    double s = 0.0;
    for (double x : samples) s += x;
    return s / static_cast<double>(samples.size());
  }

  // sup_{0 <= t <= horizon} |F_n(t) - F(t)| for a continuous CDF F, checking
  // both sides of every jump and the right end.
  double kolmogorov_distance(const std::function<double(double)>& reference) const {
    double d = 0.0;
    const double n = static_cast<double>(n_paths);
    std::size_t i = 0;
    while (i < samples.size()) {
      std::size_t j = i;
      while (j < samples.size() && samples[j] == samples[i]) ++j;
      const double f = reference(samples[i]);
      d = std::max({d, std::abs(static_cast<double>(i) / n - f), std::abs(static_cast<double>(j) / n - f)});
      i = j;
    }
    d = std::max(d, std::abs(static_cast<double>(samples.size()) / n - reference(horizon)));
    return d;
  }
};

struct MonteCarloConfig {
  ModelParams params;
  double dt = 0.01;
  double horizon = 100.0;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t chunk_size = 4096;
  int precision = kDefaultPrecision;
};

namespace detail {

// Runs body(i) for i in [0, n) over `threads` workers pulling fixed-size chunks.
// Results must be written to per-index slots so output is independent of scheduling.
template <class Body>
void parallel_for_chunks(std::size_t n, unsigned threads, std::size_t chunk_size, Body&& body) {
  chunk_size = std::max<std::size_t>(1, chunk_size);
  threads = std::max(1u, threads);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk_size);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + chunk_size);
      for (std::size_t i = begin; i < end; ++i) body(i);
    }
  };
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Path i draws X_0 uniform on B_0 and its increments from the stream
// CounterRng::for_stream(seed, i); each path stops at its first return.
inline EmpiricalDistribution monte_carlo_first_return(const MonteCarloConfig& config) {
  require_annulus(config.params);
  const long steps = steps_for(config.dt, config.horizon);
  const IncrementSampler sampler(config.params, config.dt, config.precision);
  std::vector<FirstReturn> results(config.n_paths, FirstReturn{FirstReturn::Outcome::never_exited, 0.0});

  detail::parallel_for_chunks(config.n_paths, config.threads, config.chunk_size, [&](std::size_t i) {
    CounterRng rng = CounterRng::for_stream(config.seed, i);
    PAdicScalar x = sample_ball(config.params.p, 0, rng, config.precision);
    ReturnDetector detector;
    for (long k = 1; k <= steps; ++k) {
      x = x + sampler.sample(rng);
      if (detector.observe(k, in_unit_ball(x))) break;
    }
    results[i] = detector.result(config.dt);
  });

  EmpiricalDistribution out;
  out.n_paths = config.n_paths;
  out.horizon = static_cast<double>(steps) * config.dt;
  for (const auto& r : results) {
    switch (r.outcome) {
      case FirstReturn::Outcome::returned: out.samples.push_back(r.time); break;
      case FirstReturn::Outcome::never_exited: ++out.never_exited; break;
      case FirstReturn::Outcome::no_reentry: ++out.no_reentry; break;
    }
  }
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

// Valuations of X_{steps} for n_samples independent skeletons started at 0;
// sample i uses stream for_stream(seed, i).
inline std::vector<int> sample_marginal_valuations(const ModelParams& params, double dt, long steps,
                                                   std::size_t n_samples, std::uint64_t seed, unsigned threads = 1,
                                                   int precision = kDefaultPrecision) {
  if (steps < 1) throw parameter_error("at least one step required");
  const IncrementSampler sampler(params, dt, precision);
  std::vector<int> out(n_samples);
  detail::parallel_for_chunks(n_samples, threads, 4096, [&](std::size_t i) {
    CounterRng rng = CounterRng::for_stream(seed, i);
    PAdicScalar x = PAdicScalar::zero(params.p, precision);
    for (long k = 0; k < steps; ++k) x = x + sampler.sample(rng);
    out[i] = x.valuation();
  });
  return out;
}

}  // namespace padiff
