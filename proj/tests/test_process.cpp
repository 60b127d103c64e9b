#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "padiff/process.hpp"

using namespace padiff;
using Catch::Approx;

namespace {

const ModelParams canonical{2, -1, 1.0};

// |count/n - prob| within k binomial standard deviations.
bool within_sigma(std::size_t count, std::size_t n, double prob, double k) {
  const double sd = std::sqrt(std::max(prob * (1.0 - prob), 1e-300) / n);
  return std::abs(static_cast<double>(count) / n - prob) <= k * sd + 1e-12;
}

}  // namespace

TEST_CASE("increment shell probabilities") {
  for (double dt : {0.01, 0.5, 3.0}) {
    const IncrementSampler sampler(canonical, dt);
    CHECK(sampler.shell_probability(-1) == Approx(0.5 * (1.0 - std::exp(-dt / 2.0))).epsilon(1e-12));
    CHECK(sampler.shell_probability(-2) == 0.0);
  }
  for (unsigned p : {2u, 3u, 5u}) {
    for (int r : {-2, 0, 1}) {
      const ModelParams params{p, r, 1.5};
      const IncrementSampler sampler(params, 0.3);
      double total = 0.0;
      for (int n = r; n < r + 80; ++n) {
        const double prob = sampler.shell_probability(n);
        total += prob;
        if (n < r + 12) CHECK(prob == Approx(increment_shell_probability(n, 0.3, params)).margin(1e-13));
      }
      CHECK(std::abs(total + sampler.tail_after(r + 79) - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(IncrementSampler(canonical, 0.0), domain_error);
}

TEST_CASE("empirical shell frequencies") {
  const ModelParams params{3, -2, 1.0};
  const double dt = 0.4;
  const IncrementSampler sampler(params, dt);
  CounterRng rng(555);
  constexpr std::size_t draws = 1'000'000;
  std::vector<std::size_t> counts(12, 0);
  for (std::size_t i = 0; i < draws; ++i) {
    const int n = sampler.sample_valuation(rng);
    REQUIRE(n >= params.r);
    const auto idx = static_cast<std::size_t>(std::min(n - params.r, 11));
    ++counts[idx];
  }
  for (int k = 0; k < 11; ++k) {
    CHECK(within_sigma(counts[static_cast<std::size_t>(k)], draws, sampler.shell_probability(params.r + k), 4.0));
  }
}

TEST_CASE("increment support and direction") {
  CounterRng rng(9);
  for (unsigned p : {2u, 5u}) {
    for (int r : {-3, -1}) {
      const ModelParams params{p, r, 0.5};
      const IncrementSampler sampler(params, 0.05);
      for (int i = 0; i < 20000; ++i) {
        const auto w = sampler.sample(rng);
        REQUIRE(!w.is_zero());
        CHECK(w.valuation() >= r);
      }
    }
  }
}

TEST_CASE("paths are deterministic in the seed") {
  const auto x0 = PAdicScalar::zero(2);
  const auto a = simulate_path(0.1, 5.0, x0, canonical, 123);
  const auto b = simulate_path(0.1, 5.0, x0, canonical, 123);
  const auto c = simulate_path(0.1, 5.0, x0, canonical, 124);
  REQUIRE(a.states.size() == 51);
  CHECK(a.states == b.states);
  CHECK(a.states != c.states);
  for (std::size_t k = 1; k < a.states.size(); ++k) {
    const auto step = a.states[k] - a.states[k - 1];
    CHECK((step.is_zero() || step.valuation() >= canonical.r));
  }
  CHECK(simulate_path(0.5, 0.5, x0, canonical, 1).states.size() == 2);
  CHECK_THROWS_AS(simulate_path(0.5, 0.2, x0, canonical, 1), parameter_error);
}

TEST_CASE("first return detection on fixtures") {
  auto fixture = [](std::vector<int> valuations, double dt) {
    PathRecord path{canonical, dt, {}, 0};
    for (int v : valuations) path.states.push_back(PAdicScalar::from_fraction(2, 1, v));
    return path;
  };
  // |X| = 1, 2, 1/2
  const auto ret = first_return_time(fixture({0, -1, 1}, 0.5));
  CHECK(ret.outcome == FirstReturn::Outcome::returned);
  CHECK(ret.time == 1.0);

  const auto stay = first_return_time(fixture({0, 0, 3, 1}, 0.5));
  CHECK(stay.outcome == FirstReturn::Outcome::never_exited);
  const auto away = first_return_time(fixture({0, -1, -1}, 0.5));
  CHECK(away.outcome == FirstReturn::Outcome::no_reentry);

  CHECK_THROWS_AS(first_return_time(fixture({-1, 0}, 0.5)), parameter_error);
}

TEST_CASE("increments cannot leave the unit ball when r >= 0") {
  CounterRng rng(77);
  for (const auto& params : {ModelParams{2, 0, 1.0}, ModelParams{3, 2, 0.5}}) {
    const IncrementSampler sampler(params, 1.0);
    int exits = 0;
    for (int path = 0; path < 10000; ++path) {
      auto x = sample_ball(params.p, 0, rng);
      ReturnDetector detector;
      for (long k = 1; k <= 20; ++k) {
        x = x + sampler.sample(rng);
        detector.observe(k, in_unit_ball(x));
      }
      if (detector.result(1.0).outcome != FirstReturn::Outcome::never_exited) ++exits;
    }
    CHECK(exits == 0);
  }
  MonteCarloConfig config;
  config.params = ModelParams{2, 0, 1.0};
  CHECK_THROWS_AS(monte_carlo_first_return(config), parameter_error);
}

TEST_CASE("skeleton marginals match the transition function") {
  const ModelParams params{2, -2, 1.0};
  const double dt = 0.05;
  constexpr std::size_t n = 100000;
  for (long steps : {1L, 10L}) {
    const auto vals = sample_marginal_valuations(params, dt, steps, n, 2024);
    const double t = dt * static_cast<double>(steps);
    for (int k = params.r; k <= 3; ++k) {
      std::size_t inside = 0;
      for (int v : vals) inside += v >= k;
      const double prob = transition_P(t, PAdicScalar::zero(2), Ball::around_zero(2, -k), params);
      CHECK(within_sigma(inside, n, prob, 4.0));
    }
  }
}

TEST_CASE("Monte Carlo is reproducible and chunk invariant") {
  MonteCarloConfig config;
  config.params = canonical;
  config.dt = 0.05;
  config.horizon = 40.0;
  config.n_paths = 3000;
  config.seed = 99;
  const auto serial = monte_carlo_first_return(config);
  config.threads = 3;
  config.chunk_size = 101;
  const auto parallel = monte_carlo_first_return(config);
  CHECK(serial.samples == parallel.samples);
  CHECK(serial.never_exited == parallel.never_exited);
  CHECK(serial.no_reentry == parallel.no_reentry);
  CHECK(serial.samples.size() + serial.censored() == config.n_paths);
  for (double s : serial.samples) {
    CHECK(s > 0.0);
    CHECK(s <= serial.horizon);
  }
  config.seed = 100;
  CHECK(monte_carlo_first_return(config).samples != serial.samples);

  const auto d = serial.kolmogorov_distance(oracle::canonical_return_cdf);
  CHECK(d < 0.05);
}

TEST_CASE("censoring at the canonical horizon") {
  MonteCarloConfig config;
  config.params = canonical;
  config.n_paths = 3000;
  config.seed = 5;
  const auto mc = monte_carlo_first_return(config);
  // Analytic tail 1 - F(100) = 26 e^{-25}, far below e^{-horizon/10}.
  CHECK(mc.censored_fraction() < 0.01);
  CHECK(mc.censored_fraction() <= std::exp(-config.horizon / 10.0));
}

TEST_CASE("Kolmogorov distance on a known sample") {
  EmpiricalDistribution e;
  e.samples = {0.5, 0.5, 1.0};
  e.n_paths = 4;
  e.horizon = 2.0;
  auto uniform = [](double t) { return std::min(1.0, t / 2.0); };
  // Jumps: at 0.5 to 1/2 (F = 1/4), at 1.0 to 3/4 (F = 1/2), end 3/4 vs 1.
  CHECK(e.kolmogorov_distance(uniform) == Approx(0.25));
  CHECK(e.cdf(0.49) == 0.0);
  CHECK(e.cdf(0.5) == 0.5);
  CHECK(e.mean() == Approx(2.0 / 3.0));
}
