#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "padiff/pseudodiff.hpp"

namespace padiff::cli {

enum ExitCode : int { kSuccess = 0, kVerificationFailure = 1, kParameterError = 2 };

struct RunConfig {
  std::string command;
  ModelParams params;
  std::vector<double> t{1.0};
  std::vector<double> s;  // empty: default grid 10^1 .. 10^-6
  double dt = 0.01;
  double horizon = 100.0;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out;
  int precision = 32;
  int n_max = 8;
  std::size_t cases = 100;
  std::string start = "uniform";
  int sweep = 5;
  bool inject_fault = false;
};

struct CheckResult {
  std::string name;
  bool passed;
  double value;
  double threshold;
};

// The invariant suite behind `verify`: the base parameters of `config`
// followed by `config.sweep` parameter sets drawn from `config.seed`.
std::vector<CheckResult> run_verification(const RunConfig& config);

// Parameter sets of the verification sweep.
std::vector<ModelParams> sweep_parameters(int count, std::uint64_t seed);

// Parses argv and dispatches. Without --out the CSV goes to `out` and the
// JSON summary to `err`; with --out they go to the file and to file + ".json".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace padiff::cli
