#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedexprox/config.hpp"
#include "fedexprox/engine.hpp"
#include "fedexprox/problem.hpp"
#include "fedexprox/trace.hpp"

namespace fedexprox::harness {

FederatedProblem make_problem(const config::ExperimentConfig& cfg);

// The config restricted to one cell (single-valued lists); its canonical()
// form is what goes into the trace header and what `verify` reads back.
config::ExperimentConfig cell_config(const config::ExperimentConfig& cfg, const config::Cell& cell);
// Inverse of ExperimentConfig::canonical().
config::ExperimentConfig parse_canonical(const std::string& line);

engine::RunConfig run_config(const config::ExperimentConfig& cfg, const config::Cell& cell);

// Throws ConfigError if a relative-theory policy meets an inadmissible eps2
// or an absolute oracle, unless the config expects divergence, in which case
// such cells are reported through `skipped`.
void check_sweep(const config::ExperimentConfig& cfg, const FederatedProblem& problem,
                 std::vector<config::Cell>* skipped = nullptr);

struct CellResult {
  config::Cell cell;
  std::string config_line;
  engine::RunTrace trace;
  std::optional<std::filesystem::path> path;
};

CellResult run_cell(const config::ExperimentConfig& cfg, const FederatedProblem& problem,
                    const config::Cell& cell, const std::optional<std::filesystem::path>& out);

std::vector<CellResult> sweep(const config::ExperimentConfig& cfg, const FederatedProblem& problem,
                              const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct Violation {
  std::size_t iter = 0;
  double observed = 0.0;
  double bound = 0.0;
  std::string check;
};

struct VerifyReport {
  bool ok = true;
  bool checked = false;  // false when no deterministic envelope applies
  std::vector<std::string> checks;
  std::optional<Violation> first_violation;
  std::string note;

  std::string text() const;
};

// Per-iteration comparison of a trace against the theory envelope for the
// cell's (mode, policy). Slack 1e-9 * E_0 + 1e-12 (distance checks use
// Delta_0 in place of E_0).
VerifyReport verify_trace(const trace::ParsedTrace& trace, const FederatedProblem& problem,
                          const config::ExperimentConfig& cell_cfg);
VerifyReport verify_trace(const trace::ParsedTrace& trace);  // rebuilds the problem

inline constexpr double kVerifyRelSlack = 1e-9;
inline constexpr double kVerifyAbsSlack = 1e-12;

// Rate-comparison table for the problem at the config's first gamma, eps1,
// eps2 and tau.
std::string table1(const config::ExperimentConfig& cfg, const FederatedProblem& problem);

// Output directory precedence: explicit flag, FEDEXPROX_OUTPUT_DIR, config.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const config::ExperimentConfig& cfg);

}  // namespace fedexprox::harness
