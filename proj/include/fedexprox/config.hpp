#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedexprox/engine.hpp"
#include "fedexprox/problem.hpp"
#include "fedexprox/prox.hpp"

// Flat `key = value` experiment files. Lists are comma separated, `#` starts
// a comment. Unknown keys are errors. See README for the key reference.

namespace fedexprox::config {

// Prox-oracle mode names: exact, abs-inject, rel-inject, gd-abs, gd-rel,
// agd-abs, agd-rel.
enum class EpsKind { kNone, kAbsolute, kRelative };
EpsKind eps_kind_of_mode(const std::string& mode);
prox::InexactnessSpec make_spec(const std::string& mode, double eps);

struct Algorithm {
  std::string mode;
  std::string policy;
};

struct ExperimentConfig {
  std::string name = "experiment";
  // problem
  std::size_t n = 20;
  Index d = 300;
  std::uint64_t seed = 1;
  Spectrum spectrum{};
  // runs
  std::size_t K = 2000;
  std::vector<double> gamma{1.0};
  std::vector<double> eps1{1e-3};
  std::vector<double> eps2{1e-2};
  std::vector<std::string> modes{"exact"};
  std::vector<std::string> policies{"theory-exact"};
  std::vector<Algorithm> algorithms;  // explicit pairs, override modes x policies
  std::vector<std::size_t> tau;       // empty means tau = n
  std::optional<double> alpha;        // for the constant policy
  std::uint64_t run_seed = 1;
  std::uint64_t x0_seed = 1;
  // output
  std::string output_dir = "out";
  bool report = true;
  bool expect_divergence = false;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  // Sorted `key=value;...` form written to trace headers.
  std::string canonical() const;
};

ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<stream>");
ExperimentConfig load_config(const std::filesystem::path& path);
// Applies one `key = value` assignment (also used for CLI overrides).
void assign(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// One run of a sweep.
struct Cell {
  Algorithm algorithm;
  double gamma = 1.0;
  double eps = 0.0;  // eps1 or eps2 depending on the mode, 0 for exact
  std::size_t tau = 1;

  prox::InexactnessSpec spec() const { return make_spec(algorithm.mode, eps); }
  engine::ExtrapolationPolicy policy(std::optional<double> alpha) const;
  // Stable identifier, also the file stem of the cell's trace.
  std::string key() const;
  // Seed of the cell's run substreams: a hash of key() mixed with run_seed,
  // so adding or removing cells never changes another cell's output.
  std::uint64_t seed(std::uint64_t run_seed) const;
};

std::vector<Cell> expand(const ExperimentConfig& cfg);

// x0 ~ N(0, I) from the start-point substream of x0_seed.
Vector start_point(std::uint64_t x0_seed, Index d);

// Compact number formatting for keys and canonical forms (%.17g, trimmed).
std::string format_number(double v);

}  // namespace fedexprox::config
