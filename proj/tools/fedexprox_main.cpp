// fedexprox: run, sweep and verify inexact FedExProx experiments.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 any other runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedexprox/config.hpp"
#include "fedexprox/errors.hpp"
#include "fedexprox/harness.hpp"
#include "fedexprox/problem_io.hpp"
#include "fedexprox/trace.hpp"

namespace fs = std::filesystem;
using fedexprox::config::ExperimentConfig;

namespace {

// Config-shaping flags shared by run, sweep and table1. Values are applied
// as `key = value` assignments on top of the config file.
struct Overrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string*>> slots;
  std::vector<std::string> sets;
  std::string gamma, mode, policy, K, eps1, eps2, tau, alpha, n, d, seed;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "experiment config file")->check(CLI::ExistingFile);
    const auto add = [&](const char* flag, const char* key, std::string* slot, const char* help) {
      app->add_option(flag, *slot, help);
      slots.emplace_back(key, slot);
    };
    add("--gamma", "gamma", &gamma, "prox step size(s), comma separated");
    add("--mode", "mode", &mode, "prox oracle mode(s)");
    add("--policy", "policy", &policy, "extrapolation policy(ies)");
    add("--K", "K", &K, "number of rounds");
    add("--eps1", "eps1", &eps1, "absolute inexactness level(s)");
    add("--eps2", "eps2", &eps2, "relative inexactness level(s)");
    add("--tau", "tau", &tau, "clients sampled per round");
    add("--alpha", "alpha", &alpha, "alpha for the constant policy");
    add("--n", "n", &n, "number of clients");
    add("--d", "d", &d, "dimension");
    add("--seed", "seed", &seed, "problem seed");
    app->add_option("--set", sets, "extra key=value assignment (repeatable)");
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = fedexprox::config::load_config(config_path);
    for (const auto& [key, slot] : slots) {
      if (!slot->empty()) fedexprox::config::assign(cfg, key, *slot);
    }
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw fedexprox::ConfigError("--set expects key=value");
      fedexprox::config::assign(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

int cmd_run(const Overrides& ov, const std::string& out_flag, const std::string& dir_flag) {
  const ExperimentConfig cfg = ov.build();
  const auto cells = fedexprox::config::expand(cfg);
  if (cells.size() != 1) {
    throw fedexprox::ConfigError("run needs exactly one cell, config expands to " +
                                 std::to_string(cells.size()) + " (use sweep)");
  }
  const auto problem = fedexprox::harness::make_problem(cfg);
  fedexprox::harness::check_sweep(cfg, problem);
  fs::path out;
  if (!out_flag.empty()) {
    out = out_flag;
  } else {
    out = fedexprox::harness::resolve_output_dir(
              dir_flag.empty() ? std::nullopt : std::optional<std::string>(dir_flag), cfg) /
          (cells.front().key() + ".csv");
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const auto result = fedexprox::harness::run_cell(cfg, problem, cells.front(), out);
  const auto& last = result.trace.records.back();
  std::cout << cells.front().key() << ": " << result.trace.records.size() - 1
            << " rounds, final sq_dist " << last.sq_dist << ", envelope gap " << last.envelope_gap;
  if (result.trace.diverged()) std::cout << ", diverged at iter " << *result.trace.diverged_at;
  std::cout << "\ntrace written to " << out.string() << "\n";
  if (cfg.report) {
    const auto parsed = fedexprox::trace::read_trace(out);
    std::cout << fedexprox::harness::verify_trace(parsed, problem,
                                                  fedexprox::harness::cell_config(cfg, cells.front()))
                     .text();
  }
  return 0;
}

int cmd_sweep(const Overrides& ov, const std::string& dir_flag) {
  const ExperimentConfig cfg = ov.build();
  const auto problem = fedexprox::harness::make_problem(cfg);
  const fs::path dir = fedexprox::harness::resolve_output_dir(
      dir_flag.empty() ? std::nullopt : std::optional<std::string>(dir_flag), cfg);
  const auto results = fedexprox::harness::sweep(cfg, problem, dir, &std::cout);
  if (!cfg.report) return 0;
  bool ok = true;
  for (const auto& r : results) {
    const auto parsed = fedexprox::trace::read_trace(*r.path);
    const auto report = fedexprox::harness::verify_trace(
        parsed, problem, fedexprox::harness::cell_config(cfg, r.cell));
    std::cout << r.cell.key() << ": " << report.text();
    ok = ok && report.ok;
  }
  return ok ? 0 : 1;
}

int cmd_verify(const std::vector<std::string>& traces) {
  bool ok = true;
  std::vector<fs::path> files;
  for (const std::string& t : traces) {
    if (fs::is_directory(t)) {
      for (const auto& entry : fs::directory_iterator(t)) {
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
      }
    } else {
      files.emplace_back(t);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw fedexprox::ConfigError("verify: no trace files given");
  for (const fs::path& f : files) {
    const auto parsed = fedexprox::trace::read_trace(f);
    const auto report = fedexprox::harness::verify_trace(parsed);
    std::cout << f.string() << ": " << report.text();
    ok = ok && report.ok;
  }
  return ok ? 0 : 1;
}

int cmd_table1(const Overrides& ov) {
  const ExperimentConfig cfg = ov.build();
  const auto problem = fedexprox::harness::make_problem(cfg);
  std::cout << fedexprox::harness::table1(cfg, problem);
  return 0;
}

int cmd_problem(const Overrides& ov, const std::string& out) {
  const ExperimentConfig cfg = ov.build();
  const auto problem = fedexprox::harness::make_problem(cfg);
  fedexprox::save_problem(problem, out);
  std::cout << "n = " << problem.n_clients() << ", d = " << problem.dim()
            << ", mu = " << problem.mu() << ", L_max = " << problem.L_max() << "\nwritten to "
            << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact FedExProx simulator and theory calculator"};
  app.require_subcommand(1);

  Overrides run_ov, sweep_ov, table_ov, problem_ov;
  std::string run_out, run_dir, sweep_dir, problem_out;
  std::vector<std::string> traces;

  CLI::App* run = app.add_subcommand("run", "execute one run and write its CSV trace");
  run_ov.attach(run);
  run->add_option("-o,--out", run_out, "trace path (default <output_dir>/<cell>.csv)");
  run->add_option("--output-dir", run_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "execute every cell of a config");
  sweep_ov.attach(sweep);
  sweep->add_option("--output-dir", sweep_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify", "check traces against the theory envelopes");
  verify->add_option("-t,--trace", traces, "trace file or directory of traces")->required();

  CLI::App* table1 = app.add_subcommand("table1", "print the rate comparison table");
  table_ov.attach(table1);

  CLI::App* problem = app.add_subcommand("problem", "dump the generated problem in binary form");
  problem_ov.attach(problem);
  problem->add_option("-o,--out", problem_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_ov, run_out, run_dir);
    if (sweep->parsed()) return cmd_sweep(sweep_ov, sweep_dir);
    if (verify->parsed()) return cmd_verify(traces);
    if (table1->parsed()) return cmd_table1(table_ov);
    if (problem->parsed()) return cmd_problem(problem_ov, problem_out);
  } catch (const fedexprox::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedexprox::InadmissibleInexactness& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedexprox::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
