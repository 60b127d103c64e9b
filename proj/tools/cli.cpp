#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "padiff/heat.hpp"
#include "padiff/passage.hpp"
#include "padiff/process.hpp"
#include "padiff/schwartz.hpp"
#include "padiff/stats.hpp"

namespace padiff::cli {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string valuation_field(const PAdicScalar& x) { return x.is_zero() ? "" : std::to_string(x.valuation()); }

// Comma-separated table with a fixed header; numeric fields carry 17
// significant digits and an empty field stands for "not defined here".
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(std::vector<std::string> fields) {
    if (fields.size() != header_.size()) throw std::logic_error("csv row width mismatch");
    rows_.push_back(std::move(fields));
  }

  const std::vector<std::string>& header() const noexcept { return header_; }

  void write(std::ostream& os) const {
    write_line(os, header_);
    for (const auto& r : rows_) write_line(os, r);
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << fields[i];
    }
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

json params_json(const ModelParams& params) { return {{"p", params.p}, {"r", params.r}, {"alpha", params.alpha}}; }

json summary_base(const RunConfig& c) {
  return {{"command", c.command}, {"params", params_json(c.params)}, {"seed", c.seed}, {"precision", c.precision}};
}

void emit(const RunConfig& c, const Csv& csv, json summary, std::ostream& out, std::ostream& err) {
  summary["columns"] = csv.header();
  if (c.out.empty()) {
    csv.write(out);
    err << summary.dump(2) << '\n';
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw parameter_error("cannot open output file " + c.out);
  csv.write(file);
  std::ofstream side(c.out + ".json", std::ios::binary);
  if (!side) throw parameter_error("cannot open output file " + c.out + ".json");
  side << summary.dump(2) << '\n';
}

PAdicScalar random_scalar(unsigned p, CounterRng& rng, int vmin, int vmax, int precision) {
  const int v = vmin + static_cast<int>(rng.below(static_cast<std::uint64_t>(vmax - vmin + 1)));
  std::vector<std::uint32_t> digits(1 + rng.below(5));
  digits[0] = 1 + static_cast<std::uint32_t>(rng.below(p - 1));
  for (std::size_t j = 1; j < digits.size(); ++j) digits[j] = static_cast<std::uint32_t>(rng.below(p));
  return PAdicScalar::from_digits(p, v, std::move(digits), precision);
}

// Up to six terms on balls of radius exponent in [min(r,0) - 1, 1].
TestFunction random_test_function(const ModelParams& params, CounterRng& rng, int precision) {
  const unsigned p = params.p;
  const int gmin = std::min(params.r, 0) - 1;
  TestFunction f(p);
  const auto terms = 1 + rng.below(6);
  for (std::uint64_t i = 0; i < terms; ++i) {
    const int gamma = gmin + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 - gmin)));
    const auto center = rng.below(4) == 0 ? PAdicScalar::zero(p, precision) : random_scalar(p, rng, -2, 3, precision);
    const Complex c(static_cast<double>(rng.below(2001)) / 1000.0 - 1.0, static_cast<double>(rng.below(2001)) / 1000.0 - 1.0);
    f.add(c, Ball(center, gamma));
  }
  return f;
}

PAdicScalar random_point(const TestFunction& f, CounterRng& rng, int precision) {
  if (rng.below(3) == 0) return f.terms()[rng.below(f.terms().size())].ball.center;
  return random_scalar(f.prime(), rng, -3, 3, precision);
}

double operator_gap(const TestFunction& f, const PAdicScalar& x, const ModelParams& params) {
  return std::abs(apply_H_integral(f, x, params) - apply_H_multiplier(f, x, params));
}

std::vector<double> s_grid(const RunConfig& c) { return c.s.empty() ? default_s_grid() : c.s; }

// ---- commands ----

int cmd_heat(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_positive_alpha(c.params);
  if (c.n_max < c.params.r - 1) throw parameter_error("--nmax must be at least r - 1");
  for (double t : c.t) {
    if (!(t >= 0)) throw domain_error("t >= 0 required, got " + num(t));
  }
  const auto survival = survival_S_modes(c.params);
  Csv csv({"t", "n", "norm", "Z", "u", "S"});
  json masses = json::array();
  bool any_zero = false;
  for (double t : c.t) {
    for (int n = c.params.r - 1; n <= c.n_max; ++n) {
      const std::string z = t > 0 ? num(heat_kernel(n, t, c.params)) : "";
      csv.row({num(t), std::to_string(n), num(ipow(c.params.p, -n)), z, num(u_value(n, t, c.params)), num(survival(t))});
    }
    if (t > 0) {
      masses.push_back({{"t", t}, {"mass", heat_mass(t, c.params)}});
    } else {
      any_zero = true;
    }
  }
  auto summary = summary_base(c);
  summary["heat_mass"] = masses;
  if (any_zero) summary["note"] = "Z requires t > 0 and is left empty at t = 0; u and S are given at t = 0";
  emit(c, csv, summary, out, err);
  return kSuccess;
}

int cmd_operator_check(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_positive_alpha(c.params);
  CounterRng rng(c.seed);
  Csv csv({"case", "terms", "x_valuation", "multiplier_re", "multiplier_im", "integral_re", "integral_im", "abs_error"});
  double worst = 0.0;
  for (std::size_t i = 0; i < c.cases; ++i) {
    const auto f = random_test_function(c.params, rng, c.precision);
    const auto x = random_point(f, rng, c.precision);
    const auto m = apply_H_multiplier(f, x, c.params);
    const auto k = apply_H_integral(f, x, c.params);
    const double gap = std::abs(m - k);
    worst = std::max(worst, gap);
    csv.row({std::to_string(i), std::to_string(f.terms().size()), valuation_field(x), num(m.real()), num(m.imag()),
             num(k.real()), num(k.imag()), num(gap)});
  }
  constexpr double tolerance = 1e-10;
  auto summary = summary_base(c);
  summary["cases"] = c.cases;
  summary["max_abs_error"] = worst;
  summary["tolerance"] = tolerance;
  summary["passed"] = worst <= tolerance;
  json kernel = json::array();
  for (int j = std::min(c.params.r, 0); j <= -c.params.r; ++j) kernel.push_back({{"norm_exponent", j}, {"K", kernel_K(-j, c.params)}});
  summary["kernel_on_shells"] = kernel;
  summary["C"] = c.params.r < 0 ? json(kernel_C(c.params)) : json(nullptr);
  emit(c, csv, summary, out, err);
  return worst <= tolerance ? kSuccess : kVerificationFailure;
}

int cmd_simulate(const RunConfig& c, std::size_t n_paths, std::ostream& out, std::ostream& err) {
  require_positive_alpha(c.params);
  validate_precision(c.precision);
  if (c.start != "uniform" && c.start != "zero") throw parameter_error("--start must be 'uniform' or 'zero'");
  Csv csv({"path", "step", "t", "valuation", "norm", "in_unit_ball"});
  std::size_t returned = 0, never_exited = 0, no_reentry = 0;
  int min_increment_valuation = kInfiniteValuation;
  for (std::size_t i = 0; i < n_paths; ++i) {
    auto rng = CounterRng::for_stream(c.seed, i);
    const auto x0 = c.start == "zero" ? PAdicScalar::zero(c.params.p, c.precision) : sample_ball(c.params.p, 0, rng, c.precision);
    const auto path = simulate_path(c.dt, c.horizon, x0, c.params, rng);
    for (std::size_t k = 0; k < path.states.size(); ++k) {
      const auto& x = path.states[k];
      csv.row({std::to_string(i), std::to_string(k), num(path.time(k)), valuation_field(x), num(x.norm()),
               in_unit_ball(x) ? "1" : "0"});
      if (k > 0) {
        const auto w = x - path.states[k - 1];
        if (!w.is_zero()) min_increment_valuation = std::min(min_increment_valuation, w.valuation());
      }
    }
    switch (first_return_time(path).outcome) {
      case FirstReturn::Outcome::returned: ++returned; break;
      case FirstReturn::Outcome::never_exited: ++never_exited; break;
      case FirstReturn::Outcome::no_reentry: ++no_reentry; break;
    }
  }
  auto summary = summary_base(c);
  summary["n_paths"] = n_paths;
  summary["dt"] = c.dt;
  summary["steps"] = steps_for(c.dt, c.horizon);
  summary["start"] = c.start;
  summary["returned"] = returned;
  summary["never_exited"] = never_exited;
  summary["no_reentry"] = no_reentry;
  summary["increment_support_ok"] = min_increment_valuation >= c.params.r;
  emit(c, csv, summary, out, err);
  return kSuccess;
}

int cmd_first_return(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_annulus(c.params);
  validate_precision(c.precision);
  const auto g = g_modes(c.params);
  const auto survival = survival_S_modes(c.params);
  const auto f = volterra_solve(TimeGrid::sample(g, c.dt, c.horizon));
  const ReturnDensity analytic(g);
  const auto report = recurrence_report(c.params, default_s_grid());

  std::optional<EmpiricalDistribution> mc;
  constexpr std::size_t chunk = 4096;
  if (c.n_paths > 0) {
    MonteCarloConfig config;
    config.params = c.params;
    config.dt = c.dt;
    config.horizon = c.horizon;
    config.n_paths = c.n_paths;
    config.seed = c.seed;
    config.threads = c.threads;
    config.chunk_size = chunk;
    config.precision = c.precision;
    mc = monte_carlo_first_return(config);
  }

  std::vector<std::string> header{"t", "f_analytic", "f_volterra"};
  if (mc) header.push_back("ecdf_mc");
  header.insert(header.end(), {"g", "S"});
  Csv csv(header);
  double volterra_error = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double t = f.times[i];
    const double exact = analytic.density(t);
    volterra_error = std::max(volterra_error, std::abs(exact - f.values[i]));
    std::vector<std::string> row{num(t), num(exact), num(f.values[i])};
    if (mc) row.push_back(num(mc->cdf(t)));
    row.push_back(num(g(t)));
    row.push_back(num(survival(t)));
    csv.row(std::move(row));
  }

  auto summary = summary_base(c);
  summary["dt"] = c.dt;
  summary["horizon"] = c.horizon;
  summary["C"] = report.C;
  summary["residue"] = report.residue;
  summary["mean_return_time"] = report.mean_return_time;
  summary["verdict"] = report.verdict();
  summary["volterra_max_abs_error"] = volterra_error;
  summary["n_paths"] = c.n_paths;
  if (mc) {
    summary["threads"] = c.threads;
    summary["chunk_size"] = chunk;
    summary["monte_carlo_mean"] = mc->mean();
    summary["censored_fraction"] = mc->censored_fraction();
    summary["never_exited"] = mc->never_exited;
    summary["no_reentry"] = mc->no_reentry;
    summary["ks_distance"] = mc->kolmogorov_distance([&](double t) { return analytic.cdf(t); });
  }
  emit(c, csv, summary, out, err);
  return kSuccess;
}

int cmd_volterra(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_annulus(c.params);
  const auto g = g_modes(c.params);
  const auto f = volterra_solve(TimeGrid::sample(g, c.dt, c.horizon));
  const ReturnDensity analytic(g);
  Csv csv({"t", "g", "f_volterra", "f_analytic", "abs_error"});
  double worst = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double exact = analytic.density(f.times[i]);
    worst = std::max(worst, std::abs(exact - f.values[i]));
    if (i > 0) mass += 0.5 * f.dt * (f.values[i] + f.values[i - 1]);
    csv.row({num(f.times[i]), num(g(f.times[i])), num(f.values[i]), num(exact), num(std::abs(exact - f.values[i]))});
  }
  auto summary = summary_base(c);
  summary["dt"] = c.dt;
  summary["horizon"] = c.horizon;
  summary["max_abs_error"] = worst;
  summary["integral_f"] = mass;
  emit(c, csv, summary, out, err);
  return kSuccess;
}

int cmd_laplace(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_annulus(c.params);
  const auto report = recurrence_report(c.params, s_grid(c));
  Csv csv({"s", "G", "G_expansion", "F", "sG"});
  double gap = 0.0;
  for (const auto& row : report.rows) {
    const double expansion = laplace_G_expansion(row.s, c.params);
    gap = std::max(gap, std::abs(expansion - row.G) / std::max(1.0, row.G));
    csv.row({num(row.s), num(row.G), num(expansion), num(row.F), num(row.sG)});
  }
  auto summary = summary_base(c);
  summary["C"] = report.C;
  summary["residue"] = report.residue;
  summary["mean_return_time"] = report.mean_return_time;
  summary["verdict"] = report.verdict();
  summary["max_expansion_gap"] = gap;
  emit(c, csv, summary, out, err);
  return kSuccess;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto results = run_verification(c);
  Csv csv({"check", "status", "value", "threshold"});
  json failed = json::array();
  for (const auto& r : results) {
    csv.row({r.name, r.passed ? "PASS" : "FAIL", num(r.value), num(r.threshold)});
    if (!r.passed) failed.push_back(r.name);
  }
  auto summary = summary_base(c);
  summary["sweep"] = c.sweep;
  json sweep = json::array();
  for (const auto& p : sweep_parameters(c.sweep, c.seed)) sweep.push_back(params_json(p));
  summary["sweep_params"] = sweep;
  summary["inject_fault"] = c.inject_fault;
  summary["checks"] = results.size();
  summary["failed"] = failed;
  summary["all_passed"] = failed.empty();
  emit(c, csv, summary, out, err);
  return failed.empty() ? kSuccess : kVerificationFailure;
}

// ---- verification suite ----

class Checks {
 public:
  explicit Checks(std::string prefix) : prefix_(std::move(prefix)) {}

  void at_most(const std::string& name, double value, double threshold) {
    results_.push_back({prefix_ + name, value <= threshold, value, threshold});
  }
  void at_least(const std::string& name, double value, double threshold) {
    results_.push_back({prefix_ + name, value >= threshold, value, threshold});
  }
  void holds(const std::string& name, bool ok, double value, double threshold) {
    results_.push_back({prefix_ + name, ok, value, threshold});
  }

  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::string prefix_;
  std::vector<CheckResult> results_;
};

struct SuiteOptions {
  bool full = false;  // base parameters: larger samples and the stochastic checks
  bool inject_fault = false;
  unsigned threads = 1;
  std::uint64_t seed = 1;
  int precision = kDefaultPrecision;
};

void check_operator(Checks& out, const ModelParams& params, const SuiteOptions& o) {
  CounterRng rng(o.seed ^ 0x6f70);
  double worst = 0.0;
  const int cases = o.full ? 100 : 12;
  for (int i = 0; i < cases; ++i) {
    const auto f = random_test_function(params, rng, o.precision);
    worst = std::max(worst, operator_gap(f, random_point(f, rng, o.precision), params));
  }
  out.at_most("operator/integral_equals_multiplier", worst, 1e-10);
  if (params.r >= 0) return;
  const double c = kernel_C(params);
  out.holds("operator/C_in_unit_interval", c > 0.0 && c < 1.0, c, 1.0);
  double k_max = -INFINITY;
  for (int j = 1; j <= -params.r; ++j) k_max = std::max(k_max, kernel_K(-j, params));
  out.holds("operator/kernel_negative_on_annulus", k_max < 0.0, k_max, 0.0);
  if (params.p == 2 && params.r == -1 && params.alpha == 1.0) out.at_most("operator/C_canonical", std::abs(c - 0.25), 1e-14);
}

void check_heat(Checks& out, const ModelParams& params, const SuiteOptions& o) {
  double mass_gap = 0.0, z_min = INFINITY, outside = 0.0, semigroup = 0.0;
  for (double t : {0.01, 0.1, 1.0, 10.0}) {
    mass_gap = std::max(mass_gap, std::abs(heat_mass(t, params) - 1.0));
    for (int n = params.r - 2; n <= params.r + 30; ++n) {
      const double z = heat_kernel(n, t, params);
      if (n < params.r) {
        outside = std::max(outside, std::abs(z));
      } else {
        z_min = std::min(z_min, z);
      }
    }
  }
  for (auto [t, s] : {std::pair{0.3, 0.7}, std::pair{1.0, 2.5}}) {
    auto zt = [&](int k) { return heat_kernel(k, t, params); };
    auto zs = [&](int k) { return heat_kernel(k, s, params); };
    const double peak = zt(kInfiniteValuation) * zs(kInfiniteValuation);
    const int cutoff = params.r + static_cast<int>(std::ceil(std::log(peak * 1e20) / std::log(params.p)));
    for (int n : {params.r, params.r + 1, params.r + 4, kInfiniteValuation}) {
      const double direct = heat_kernel(n, t + s, params);
      const double conv = radial_convolution(zt, zs, n, params.r, params.p, cutoff);
      semigroup = std::max(semigroup, std::abs(direct - conv) / std::max(1.0, direct));
    }
  }
  out.at_most("heat/mass", mass_gap, 1e-12);
  out.at_least("heat/nonnegative", z_min, -1e-14);
  out.at_most("heat/support", outside, 0.0);
  out.at_most("heat/semigroup", semigroup, 1e-12);

  CounterRng rng(o.seed ^ 0x6865);
  double residual = 0.0;
  for (int i = 0; i < (o.full ? 20 : 5); ++i) {
    const double t = 0.01 + 5.0 * rng.uniform_positive();
    const auto u = u_as_test_function(t, params, o.precision);
    for (int k = 0; k < 4; ++k) {
      const auto x = random_scalar(params.p, rng, std::min(params.r, 0) - 1, 2, o.precision);
      residual = std::max(residual, std::abs(u_dt(x.valuation(), t, params) + apply_H_multiplier(u, x, params).real()));
    }
  }
  out.at_most("heat/pde_residual", residual, 1e-10);
}

void check_passage(Checks& out, const ModelParams& params, const SuiteOptions& o) {
  const auto g = g_modes(params);
  const auto survival = survival_S_modes(params);
  const double c = kernel_C(params);
  const double sign = o.inject_fault ? -1.0 : 1.0;
  CounterRng rng(o.seed ^ 0x7061);
  double balance = 0.0, g_min = INFINITY;
  for (int i = 0; i < 20; ++i) {
    const double t = 20.0 * rng.uniform_positive();
    balance = std::max(balance, std::abs(survival.derivative()(t) - (g(t) - sign * c * survival(t))));
    g_min = std::min(g_min, g(t));
  }
  out.at_most("passage/balance", balance, 1e-12);
  out.at_least("passage/flux_nonnegative", g_min, -1e-15);
  out.at_most("passage/flux_starts_at_zero", std::abs(g(0.0)), 1e-14);

  const ReturnDensity analytic(g);
  auto volterra_error = [&](double dt, double horizon) {
    const auto f = volterra_solve(TimeGrid::sample(g, dt, horizon));
    double e = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) e = std::max(e, std::abs(f.values[i] - analytic.density(f.times[i])));
    return e;
  };
  const double e1 = volterra_error(0.01, o.full ? 60.0 : 20.0);
  out.at_most("passage/volterra", e1, 1e-3);
  if (o.full) {
    const double ratio = e1 / volterra_error(0.005, 60.0);
    out.holds("passage/volterra_second_order", ratio >= 3.5 && ratio <= 4.5, ratio, 4.0);
  }

  const auto report = recurrence_report(params, default_s_grid());
  out.holds("passage/recurrent", report.recurrent, std::abs(report.rows.back().sG - report.residue), kResidueTolerance);
  out.at_most("passage/F_tends_to_one", std::abs(1.0 - laplace_F(1e-9, params)), 1e-4);
  double gap = 0.0;
  for (double s : {1e-3, 0.5, 4.0}) {
    const double exact = laplace_G(s, params);
    gap = std::max(gap, std::abs(laplace_G_expansion(s, params) - exact) / std::max(1.0, exact));
  }
  out.at_most("passage/expansion_equals_transform", gap, 1e-10);
}

void check_process(Checks& out, const ModelParams& params, const SuiteOptions& o) {
  const double dt = 0.01;
  const IncrementSampler sampler(params, dt, o.precision);
  CounterRng rng(o.seed ^ 0x7072);
  constexpr int classes = 16;
  std::vector<std::size_t> counts(classes, 0);
  std::vector<double> probs(classes, 0.0);
  for (int k = 0; k + 1 < classes; ++k) probs[static_cast<std::size_t>(k)] = sampler.shell_probability(params.r + k);
  probs[classes - 1] = sampler.tail_after(params.r + classes - 2);
  constexpr std::size_t draws = 200000;
  int min_valuation = kInfiniteValuation;
  for (std::size_t i = 0; i < draws; ++i) {
    const int n = sampler.sample_valuation(rng);
    min_valuation = std::min(min_valuation, n);
    counts[static_cast<std::size_t>(std::min(n - params.r, classes - 1))] += 1;
  }
  out.at_least("process/increment_support", min_valuation, params.r);
  out.at_least("process/increment_shells_chi_square_p", chi_square_test(counts, probs).p_value, 1e-3);
  out.at_least("process/marginal_chi_square_p",
               marginal_radius_test(params, dt, 10, 100000, o.seed ^ 0x6d61, o.threads).p_value, 1e-3);

  if (params.r >= 0) return;
  MonteCarloConfig config;
  config.params = params;
  config.dt = dt;
  config.horizon = 100.0;
  config.n_paths = 10000;
  config.seed = o.seed;
  config.threads = o.threads;
  config.precision = o.precision;
  const auto mc = monte_carlo_first_return(config);
  const ReturnDensity analytic(params);
  out.at_most("process/monte_carlo_ks", mc.kolmogorov_distance([&](double t) { return analytic.cdf(t); }), 0.03);
  if (mc.censored_fraction() < 0.01) {
    const double mean = ipow(params.p, -params.r) / kernel_C(params);
    out.at_most("process/monte_carlo_mean_relative_error", std::abs(mc.mean() / mean - 1.0), 0.05);
  }

  config.n_paths = 2000;
  config.threads = 1;
  config.chunk_size = 4096;
  const auto serial = monte_carlo_first_return(config);
  config.threads = std::max(2u, o.threads);
  config.chunk_size = 97;
  const auto parallel = monte_carlo_first_return(config);
  const bool same = serial.samples == parallel.samples && serial.never_exited == parallel.never_exited &&
                    serial.no_reentry == parallel.no_reentry;
  out.holds("process/parallel_reproducible", same, same ? 0.0 : 1.0, 0.0);
}

std::string label(const ModelParams& params) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "[p=%u r=%d alpha=%g]", params.p, params.r, params.alpha);
  return buf;
}

void run_suite(std::vector<CheckResult>& all, const std::string& prefix, const ModelParams& params, const SuiteOptions& o) {
  Checks checks(prefix + label(params) + "/");
  check_operator(checks, params, o);
  check_heat(checks, params, o);
  if (params.r < 0) check_passage(checks, params, o);
  if (o.full) check_process(checks, params, o);
  for (auto& r : checks.take()) all.push_back(std::move(r));
}

}  // namespace

std::vector<ModelParams> sweep_parameters(int count, std::uint64_t seed) {
  CounterRng rng(seed ^ 0x7377656570ULL);
  constexpr unsigned primes[] = {2, 3, 5};
  std::vector<ModelParams> out;
  for (int i = 0; i < count; ++i) {
    const unsigned p = primes[rng.below(3)];
    const int r = -1 - static_cast<int>(rng.below(3));
    // alpha in [0.25, 3] on a 1/100 lattice so labels stay short.
    const double alpha = 0.25 + static_cast<double>(rng.below(276)) / 100.0;
    out.push_back({p, r, alpha});
  }
  return out;
}

std::vector<CheckResult> run_verification(const RunConfig& config) {
  config.params.validate();
  require_positive_alpha(config.params);
  if (config.sweep < 0) throw parameter_error("--sweep must be nonnegative");
  SuiteOptions o;
  o.inject_fault = config.inject_fault;
  o.threads = config.threads;
  o.seed = config.seed;
  o.precision = config.precision;
  std::vector<CheckResult> all;

  {
    // Substrate checks at the base prime.
    Checks checks("base" + label(config.params) + "/");
    CounterRng rng(config.seed ^ 0x7061646963ULL);
    const unsigned p = config.params.p;
    double additivity = 0.0;
    for (int i = 0; i < 200; ++i) {
      const auto x = random_scalar(p, rng, -5, 5, config.precision);
      const auto y = random_scalar(p, rng, -5, 5, config.precision);
      additivity = std::max(additivity, std::abs(character(x + y) - character(x) * character(y)));
    }
    checks.at_most("padic/character_additivity", additivity, 1e-12);
    double parseval = 0.0;
    for (int i = 0; i < 20; ++i) {
      const auto f = random_test_function(config.params, rng, config.precision);
      const double lhs = l2_norm_squared(f);
      parseval = std::max(parseval, std::abs(lhs - fourier_l2_norm_squared(f)) / std::max(1.0, lhs));
    }
    checks.at_most("schwartz/parseval", parseval, 1e-12);
    for (auto& r : checks.take()) all.push_back(std::move(r));
  }

  o.full = true;
  run_suite(all, "base", config.params, o);
  o.full = false;
  const auto sweep = sweep_parameters(config.sweep, config.seed);
  for (std::size_t i = 0; i < sweep.size(); ++i) run_suite(all, "sweep" + std::to_string(i), sweep[i], o);
  return all;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"p-adic heat kernel, jump process and first-return toolkit", "padiff"};
  app.require_subcommand(1);
  RunConfig c;
  c.threads = std::max(1u, std::thread::hardware_concurrency());
  std::size_t simulate_paths = 1;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--p", c.params.p, "prime p")->capture_default_str();
    sub->add_option("--r", c.params.r, "cutoff exponent r")->capture_default_str();
    sub->add_option("--alpha", c.params.alpha, "exponent alpha")->capture_default_str();
    sub->add_option("--precision", c.precision, "p-adic digits retained")->capture_default_str();
    sub->add_option("--seed", c.seed, "run seed")->capture_default_str();
    sub->add_option("--out", c.out, "CSV output path; the JSON summary goes to <out>.json");
  };
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--dt", c.dt, "time step")->capture_default_str();
    sub->add_option("--horizon", c.horizon, "time horizon")->capture_default_str();
  };

  auto* heat = app.add_subcommand("heat", "Z_r, u and S on the shells n = r-1 .. nmax");
  add_model(heat);
  heat->add_option("--t", c.t, "times (repeat or comma-separate)")->delimiter(',');
  heat->add_option("--nmax", c.n_max, "largest valuation tabulated")->capture_default_str();

  auto* op = app.add_subcommand("operator-check", "multiplier route vs integral route on random test functions");
  add_model(op);
  op->add_option("--cases", c.cases, "number of random cases")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "grid skeletons of the process");
  add_model(sim);
  add_grid(sim);
  sim->add_option("--paths", simulate_paths, "number of paths")->capture_default_str();
  sim->add_option("--start", c.start, "initial law: uniform (on the unit ball) or zero")->capture_default_str();

  auto* fr = app.add_subcommand("first-return", "analytic, Volterra and Monte Carlo first-return laws");
  add_model(fr);
  add_grid(fr);
  fr->add_option("--paths", c.n_paths, "Monte Carlo paths (0 for analytic columns only)")->capture_default_str();
  fr->add_option("--threads", c.threads, "worker threads");

  auto* vol = app.add_subcommand("volterra", "numeric first-return density from the Volterra equation");
  add_model(vol);
  add_grid(vol);

  auto* lap = app.add_subcommand("laplace", "G, its shell expansion and F on a decreasing s grid");
  add_model(lap);
  lap->add_option("--s", c.s, "s values, strictly decreasing")->delimiter(',');

  auto* ver = app.add_subcommand("verify", "invariant suite at the given parameters plus a random sweep");
  add_model(ver);
  ver->add_option("--sweep", c.sweep, "number of random parameter sets")->capture_default_str();
  ver->add_option("--threads", c.threads, "worker threads");
  ver->add_flag("--inject-fault", c.inject_fault, "flip a sign inside the balance check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kParameterError;
  }

  try {
    c.params.validate();
    validate_precision(c.precision);
    if (c.threads == 0) throw parameter_error("--threads must be positive");
    if (heat->parsed()) return c.command = "heat", cmd_heat(c, out, err);
    if (op->parsed()) return c.command = "operator-check", cmd_operator_check(c, out, err);
    if (sim->parsed()) return c.command = "simulate", cmd_simulate(c, simulate_paths, out, err);
    if (fr->parsed()) return c.command = "first-return", cmd_first_return(c, out, err);
    if (vol->parsed()) return c.command = "volterra", cmd_volterra(c, out, err);
    if (lap->parsed()) return c.command = "laplace", cmd_laplace(c, out, err);
    if (ver->parsed()) return c.command = "verify", cmd_verify(c, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kParameterError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kParameterError;
  }
  return kParameterError;
}

}  // namespace padiff::cli
