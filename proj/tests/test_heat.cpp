#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "padiff/heat.hpp"

using namespace padiff;
using Catch::Approx;

namespace {

const ModelParams canonical{2, -1, 1.0};

std::vector<ModelParams> parameter_sets() {
  std::vector<ModelParams> out;
  for (unsigned p : {2u, 3u, 5u}) {
    for (int r : {-3, -1, 0, 2}) {
      for (double alpha : {0.5, 1.0, 2.0}) out.push_back({p, r, alpha});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("heat kernel closed forms") {
  for (double t : {0.1, 1.0, 7.5}) {
    CHECK(heat_kernel(-2, t, canonical) == 0.0);
    CHECK(heat_kernel(-1, t, canonical) == Approx(0.5 * (1.0 - std::exp(-t / 2.0))).epsilon(1e-14));
  }
  for (int n : {-1, 0, 3, kInfiniteValuation}) CHECK(heat_kernel(n, 200.0, canonical) == Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(heat_kernel(0, 0.0, canonical), domain_error);
  CHECK_THROWS_AS(heat_kernel(0, -1.0, canonical), domain_error);
}

TEST_CASE("heat kernel mass and positivity") {
  CHECK(std::abs(heat_mass(1.0, canonical) - 1.0) <= 1e-12);
  CHECK(std::abs(heat_mass(0.1, ModelParams{3, 0, 0.5}) - 1.0) <= 1e-12);
  CHECK(std::abs(heat_mass(10.0, ModelParams{5, -2, 2.0}) - 1.0) <= 1e-12);

  for (const auto& params : parameter_sets()) {
    for (double t : {1e-3, 0.05, 1.0, 20.0}) {
      CHECK(std::abs(heat_mass(t, params) - 1.0) <= 1e-12);
      for (int n = params.r - 3; n <= params.r + 20; ++n) {
        const double z = heat_kernel(n, t, params);
        CHECK(z >= -1e-14);
        if (n < params.r) CHECK(z == 0.0);
      }
      CHECK(heat_kernel(kInfiniteValuation, t, params) > 0.0);
    }
  }
}

TEST_CASE("semigroup identity") {
  for (const auto& params : parameter_sets()) {
    for (auto [t, s] : {std::pair{0.3, 0.7}, std::pair{1.0, 2.5}, std::pair{0.05, 0.05}}) {
      for (int n : {params.r, params.r + 1, params.r + 3, kInfiniteValuation}) {
        const double direct = heat_kernel(n, t + s, params);
        const double conv = oracle::radial_convolution(n, t, s, params);
        CHECK(std::abs(direct - conv) <= 1e-12 * std::max(1.0, direct));
      }
    }
  }
}

TEST_CASE("u modes and the survival quantity") {
  const auto inside = u_modes(0, canonical);
  REQUIRE(inside.modes().size() == 2);
  CHECK(inside.modes()[0].amplitude == 0.5);
  CHECK(inside.modes()[0].rate == 0.0);
  CHECK(inside.modes()[1].amplitude == 0.5);
  CHECK(inside.modes()[1].rate == 0.5);

  const auto boundary = u_modes(-1, canonical);
  REQUIRE(boundary.modes().size() == 2);
  CHECK(boundary.modes()[1].amplitude == -0.5);
  CHECK(u_value(-2, 3.0, canonical) == 0.0);

  CHECK(u_dt(0, 0.0, canonical) == -0.25);
  CHECK(u_dt(-5, 1.0, canonical) == 0.0);

  const auto S = survival_S_modes(canonical);
  CHECK(S(0.0) == 1.0);
  CHECK(S(2.0) == Approx(0.5 + 0.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(S(1e4) == Approx(0.5).epsilon(1e-15));

  for (const auto& params : parameter_sets()) {
    for (int n = std::min(params.r, 0) - 2; n <= 3; ++n) {
      CHECK(u_value(n, 0.0, params) == Approx(n >= 0 ? 1.0 : 0.0).margin(1e-14));
    }
    if (params.r < 0) CHECK(survival_S_modes(params)(1e6) == Approx(ipow(params.p, params.r)).epsilon(1e-14));
  }
}

TEST_CASE("stationary case r >= 0") {
  const ModelParams params{3, 1, 1.5};
  for (double t : {0.0, 0.5, 100.0}) {
    CHECK(u_value(0, t, params) == 1.0);
    CHECK(u_value(-1, t, params) == 0.0);
    CHECK(u_dt(0, t, params) == 0.0);
  }
  CHECK(survival_S_modes(params).modes().size() == 1);
}

TEST_CASE("expected value of u agrees with the kernel convolution") {
  // u(x, t) = int_{B_0} Z(x - y, t) dy = P(t, x, B_0).
  for (const auto& params : parameter_sets()) {
    for (double t : {0.2, 3.0}) {
      for (int n = params.r - 1; n <= 2; ++n) {
        const auto x = PAdicScalar::from_fraction(params.p, 1, n);
        CHECK(std::abs(u_value(n, t, params) - transition_P(t, x, Ball::around_zero(params.p, 0), params)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("PDE residual") {
  CounterRng rng(12);
  for (const auto& params : parameter_sets()) {
    for (int i = 0; i < 4; ++i) {
      const double t = 0.01 + 5.0 * rng.uniform_positive();
      const auto u = u_as_test_function(t, params);
      for (int k = 0; k < 4; ++k) {
        const auto x = oracle::random_scalar(params.p, rng, std::min(params.r, 0) - 1, 2);
        const int n = x.valuation();
        CHECK(std::abs(evaluate(u, x).real() - u_value(n, t, params)) <= 1e-14);
        const double residual = u_dt(n, t, params) + apply_H_multiplier(u, x, params).real();
        CHECK(std::abs(residual) <= 1e-10);
      }
    }
  }
}

TEST_CASE("delta limit") {
  for (const auto& params : {canonical, ModelParams{3, -2, 0.5}}) {
    const auto omega = TestFunction::unit_ball(params.p);
    for (int n : {-1, 0, 2}) {
      double previous = 2.0;
      for (double t : {1e-2, 1e-3, 1e-4}) {
        const double gap = std::abs(u_value(n, t, params) - evaluate(omega, PAdicScalar::from_fraction(params.p, 1, n)).real());
        CHECK(gap <= previous);
        previous = gap;
      }
      CHECK(previous < 1e-3);
    }
  }
}

TEST_CASE("transition probabilities") {
  const auto x = PAdicScalar::from_fraction(2, 3, 0);
  const Ball b0 = Ball::around_zero(2, 0);
  CHECK(transition_P(0.0, x, b0, canonical) == 1.0);
  CHECK(transition_P(0.0, PAdicScalar::from_fraction(2, 1, -1), b0, canonical) == 0.0);
  CHECK(std::abs(transition_P(2.0, x, Ball(x, 1), canonical) - 1.0) <= 1e-14);
  CHECK(transition_P(2.0, x, Ball(x + PAdicScalar::from_fraction(2, 1, -3), 0), canonical) == 0.0);
  CHECK_THROWS_AS(transition_P(-1.0, x, b0, canonical), domain_error);

  // Balls around x against the Fourier-side ball mass.
  for (const auto& params : parameter_sets()) {
    for (double t : {0.1, 2.0}) {
      for (int gamma = -5; gamma <= -params.r + 1; ++gamma) {
        const auto y = PAdicScalar::from_integer(params.p, 7);
        CHECK(std::abs(transition_P(t, y, Ball(y, gamma), params) - heat_ball_mass(gamma, t, params)) <= 1e-12);
      }
    }
  }

  // Escape probability outside B_eps(x) decreases to 0 as t -> 0.
  for (int eps : {1, 0}) {
    double previous = 1.0;
    for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const double escape = 1.0 - transition_P(t, x, Ball(x, eps), canonical);
      CHECK(escape <= previous);
      previous = escape;
    }
    CHECK(previous < 1e-3);
  }
}
