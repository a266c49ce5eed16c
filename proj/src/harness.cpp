#include "fedexprox/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "fedexprox/errors.hpp"
#include "fedexprox/moreau.hpp"
#include "fedexprox/theory.hpp"

namespace fedexprox::harness {
namespace {

using config::Cell;
using config::EpsKind;
using config::ExperimentConfig;
using engine::ExtrapolationPolicy;
using Kind = ExtrapolationPolicy::Kind;

bool relative_theory(Kind k) {
  return k == Kind::kTheoryRelativeSGD || k == Kind::kTheoryMinibatch ||
         k == Kind::kTheoryRelativeCompression;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Cell only_cell(const ExperimentConfig& cfg) {
  const std::vector<Cell> cells = config::expand(cfg);
  if (cells.size() != 1) {
    throw ConfigError("trace config describes " + std::to_string(cells.size()) +
                      " cells, expected exactly one");
  }
  return cells.front();
}

// Checks value_k <= rate^k * prefactor * base + additive for every record.
struct EnvelopeCheck {
  std::string name;
  bool use_gap = true;  // envelope_gap, else sq_dist
  double rate = 1.0;
  double prefactor = 1.0;
  double additive = 0.0;
};

void apply(const EnvelopeCheck& check, const trace::ParsedTrace& t, VerifyReport& report) {
  const double base = check.use_gap ? t.records.front().envelope_gap : t.records.front().sq_dist;
  const double slack = kVerifyRelSlack * base + kVerifyAbsSlack;
  double envelope_k = check.prefactor * base;  // rate^k * prefactor * base
  std::size_t last_iter = 0;
  for (const engine::TraceRecord& r : t.records) {
    for (; last_iter < r.iter; ++last_iter) envelope_k *= check.rate;
    const double observed = check.use_gap ? r.envelope_gap : r.sq_dist;
    const double bound = envelope_k + check.additive;
    if (!(observed <= bound + slack)) {
      report.ok = false;
      if (!report.first_violation) report.first_violation = Violation{r.iter, observed, bound, check.name};
      break;
    }
  }
  std::ostringstream os;
  os << check.name << ": rate " << fmt(check.rate);
  if (check.prefactor != 1.0) os << ", prefactor " << fmt(check.prefactor);
  if (check.additive != 0.0) os << ", neighborhood " << fmt(check.additive);
  os << " over " << t.records.size() << " records";
  report.checks.push_back(os.str());
}

}  // namespace

FederatedProblem make_problem(const ExperimentConfig& cfg) {
  return generate_interpolated(cfg.n, cfg.d, cfg.seed, cfg.spectrum);
}

ExperimentConfig cell_config(const ExperimentConfig& cfg, const Cell& cell) {
  ExperimentConfig one = cfg;
  one.gamma = {cell.gamma};
  one.modes = {cell.algorithm.mode};
  one.policies = {cell.algorithm.policy};
  one.algorithms.clear();
  one.tau = {cell.tau};
  switch (config::eps_kind_of_mode(cell.algorithm.mode)) {
    case EpsKind::kAbsolute: one.eps1 = {cell.eps}; break;
    case EpsKind::kRelative: one.eps2 = {cell.eps}; break;
    case EpsKind::kNone: break;
  }
  if (cell.algorithm.policy != "constant") one.alpha.reset();
  return one;
}

ExperimentConfig parse_canonical(const std::string& line) {
  std::string text = line;
  for (char& ch : text) {
    if (ch == ';') ch = '\n';
  }
  std::istringstream in(text);
  return config::parse_config(in, "<trace config>");
}

engine::RunConfig run_config(const ExperimentConfig& cfg, const Cell& cell) {
  engine::RunConfig rc;
  rc.gamma = cell.gamma;
  rc.K = cfg.K;
  rc.tau = cell.tau;
  rc.spec = cell.spec();
  rc.policy = cell.policy(cfg.alpha);
  rc.x0 = config::start_point(cfg.x0_seed, cfg.d);
  rc.seed = cell.seed(cfg.run_seed);
  return rc;
}

void check_sweep(const ExperimentConfig& cfg, const FederatedProblem& problem,
                 std::vector<Cell>* skipped) {
  for (const Cell& cell : config::expand(cfg)) {
    const ExtrapolationPolicy policy = cell.policy(cfg.alpha);
    if (!relative_theory(policy.kind())) continue;
    std::string why;
    const EpsKind kind = config::eps_kind_of_mode(cell.algorithm.mode);
    if (kind == EpsKind::kAbsolute) {
      why = "relative-theory policy with an absolute oracle";
    } else {
      const moreau::EnvelopeContext ctx = moreau::make_context(problem, cell.gamma);
      const theory::ProblemConstants c = engine::constants_of(ctx, cell.tau);
      const theory::Regime regime = policy.kind() == Kind::kTheoryRelativeCompression
                                        ? theory::Regime::kRelCompression
                                        : theory::Regime::kRelSGD;
      if (!theory::check_admissible(c, regime, cell.eps)) {
        why = "eps2 = " + fmt(cell.eps) + " is not below " + fmt(theory::admissibility_bound(c, regime));
      }
    }
    if (why.empty()) continue;
    if (!cfg.expect_divergence) throw ConfigError("cell " + cell.key() + ": " + why);
    if (skipped) skipped->push_back(cell);
  }
}

CellResult run_cell(const ExperimentConfig& cfg, const FederatedProblem& problem, const Cell& cell,
                    const std::optional<std::filesystem::path>& out) {
  CellResult result;
  result.cell = cell;
  result.config_line = cell_config(cfg, cell).canonical();
  result.trace = engine::run(run_config(cfg, cell), problem);
  if (out) {
    trace::write_trace(result.trace, *out, result.config_line);
    result.path = *out;
  }
  return result;
}

std::vector<CellResult> sweep(const ExperimentConfig& cfg, const FederatedProblem& problem,
                              const std::filesystem::path& out_dir, std::ostream* log) {
  std::vector<Cell> skipped;
  check_sweep(cfg, problem, &skipped);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  std::vector<CellResult> results;
  for (const Cell& cell : config::expand(cfg)) {
    bool skip = false;
    for (const Cell& s : skipped) skip = skip || s.key() == cell.key();
    if (skip) {
      if (log) *log << "skip " << cell.key() << " (inadmissible for its theory policy)\n";
      continue;
    }
    const std::filesystem::path path = out_dir / (cell.key() + ".csv");
    results.push_back(run_cell(cfg, problem, cell, path));
    if (log) {
      const engine::RunTrace& t = results.back().trace;
      *log << cell.key() << ": final sq_dist " << fmt(t.records.back().sq_dist);
      if (t.diverged()) *log << " (diverged at iter " << *t.diverged_at << ")";
      *log << " -> " << path.string() << "\n";
    }
  }
  return results;
}

std::string VerifyReport::text() const {
  std::ostringstream os;
  os << (ok ? "PASS" : "FAIL");
  if (!checked) os << " (no deterministic envelope checked)";
  os << "\n";
  for (const std::string& c : checks) os << "  check " << c << "\n";
  if (!note.empty()) os << "  note: " << note << "\n";
  if (first_violation) {
    os << "  first violation: " << first_violation->check << " at iter " << first_violation->iter
       << ": observed " << first_violation->observed << " > bound " << first_violation->bound
       << "\n";
  }
  return os.str();
}

VerifyReport verify_trace(const trace::ParsedTrace& t, const FederatedProblem& problem,
                          const ExperimentConfig& cell_cfg) {
  VerifyReport report;
  const Cell cell = only_cell(cell_cfg);
  if (t.records.empty()) {
    report.ok = false;
    report.note = "trace has no records";
    return report;
  }

  if (cell_cfg.expect_divergence) {
    report.checked = true;
    report.checks.push_back("divergence expected by the config");
    report.ok = t.diverged_at.has_value();
    report.note = report.ok ? "diverged at iter " + std::to_string(*t.diverged_at)
                            : "run did not diverge";
    return report;
  }
  if (t.diverged_at) {
    report.ok = false;
    report.note = "run diverged at iter " + std::to_string(*t.diverged_at);
    return report;
  }
  if (cell.tau < problem.n_clients()) {
    report.note = "tau < n: the sampled-client bound holds in expectation only";
    return report;
  }

  const ExtrapolationPolicy policy = cell.policy(cell_cfg.alpha);
  const EpsKind kind = config::eps_kind_of_mode(cell.algorithm.mode);
  const moreau::EnvelopeContext ctx = moreau::make_context(problem, cell.gamma);
  const theory::ProblemConstants c = engine::constants_of(ctx, cell.tau);
  const double eps2 = kind == EpsKind::kRelative ? cell.eps : 0.0;

  std::vector<EnvelopeCheck> checks;
  switch (policy.kind()) {
    case Kind::kTheoryExact:
    case Kind::kTheoryRelativeCompression:
      if (kind == EpsKind::kAbsolute) break;
      if (!theory::check_admissible(c, theory::Regime::kRelCompression, eps2)) {
        report.note = "eps2 outside the compression-regime bound";
        break;
      }
      checks.push_back({kind == EpsKind::kNone ? "exact envelope" : "relative compression envelope",
                        true, theory::envelope_relative_compression(c, eps2).rate, 1.0, 0.0});
      break;
    case Kind::kTheoryRelativeSGD:
    case Kind::kTheoryMinibatch:
      if (kind == EpsKind::kAbsolute) break;
      if (!theory::check_admissible(c, theory::Regime::kRelSGD, eps2)) {
        report.note = "eps2 outside the SGD-regime bound";
        break;
      }
      checks.push_back({"relative SGD envelope", true,
                        theory::relative_sgd_rate(c, eps2, theory::alpha_minibatch(c, eps2, cell.tau)),
                        1.0, 0.0});
      break;
    case Kind::kTheoryAbsolute: {
      if (kind == EpsKind::kRelative) break;
      const double eps1 = kind == EpsKind::kAbsolute ? cell.eps : 0.0;
      const theory::AbsoluteEnvelope env = theory::envelope_absolute(c, eps1);
      checks.push_back({"absolute gap envelope", true, env.rate, 1.0, env.neighborhood_gap});
      checks.push_back({"absolute distance envelope", false, env.rate, env.dist_prefactor,
                        env.neighborhood_dist});
      break;
    }
    case Kind::kConstant:
    case Kind::kGradientDiversity:
    case Kind::kPolyak:
      break;
  }
  if (checks.empty()) {
    if (report.note.empty()) {
      report.note = "no theory envelope for policy " + policy.name() + " with mode " +
                    cell.algorithm.mode;
    }
    return report;
  }
  report.checked = true;
  for (const EnvelopeCheck& check : checks) apply(check, t, report);
  return report;
}

VerifyReport verify_trace(const trace::ParsedTrace& t) {
  const ExperimentConfig cfg = parse_canonical(t.config_line);
  const FederatedProblem problem = make_problem(cfg);
  return verify_trace(t, problem, cfg);
}

std::string table1(const ExperimentConfig& cfg, const FederatedProblem& problem) {
  const double gamma = cfg.gamma.front();
  const double eps1 = cfg.eps1.front();
  const double eps2 = cfg.eps2.front();
  const std::size_t tau = cfg.tau.empty() ? problem.n_clients() : cfg.tau.front();
  const moreau::EnvelopeContext ctx = moreau::make_context(problem, gamma);
  const theory::ProblemConstants c = engine::constants_of(ctx, tau);
  std::string out = theory::format_report(c, theory::rate_comparison_report(c, eps1, eps2), eps1, eps2);
  if (tau < problem.n_clients()) {
    char line[200];
    if (theory::check_admissible(c, theory::Regime::kRelSGD, eps2)) {
      std::snprintf(line, sizeof line, "tau-nice (tau = %zu): alpha %.6g, S(eps2, tau) = %.6g\n", tau,
                    theory::alpha_minibatch(c, eps2, tau), theory::slowdown_S_tau(c, eps2, tau));
    } else {
      std::snprintf(line, sizeof line, "tau-nice (tau = %zu): eps2 inadmissible\n", tau);
    }
    out += line;
  }
  return out;
}

std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const ExperimentConfig& cfg) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("FEDEXPROX_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return cfg.output_dir;
}

}  // namespace fedexprox::harness
