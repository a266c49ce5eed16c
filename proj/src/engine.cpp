#include "fedexprox/engine.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

#include "fedexprox/errors.hpp"
#include "fedexprox/rng.hpp"

namespace fedexprox::engine {
namespace {

using Kind = ExtrapolationPolicy::Kind;

struct NamedKind {
  const char* name;
  Kind kind;
};

constexpr NamedKind kPolicyNames[] = {
    {"constant", Kind::kConstant},
    {"theory-exact", Kind::kTheoryExact},
    {"theory-absolute", Kind::kTheoryAbsolute},
    {"theory-rel-sgd", Kind::kTheoryRelativeSGD},
    {"theory-rel-compression", Kind::kTheoryRelativeCompression},
    {"theory-minibatch", Kind::kTheoryMinibatch},
    {"gradient-diversity", Kind::kGradientDiversity},
    {"polyak", Kind::kPolyak},
};

// eps2 seen by the relative theories; exact mode counts as eps2 = 0.
double relative_level(const ExtrapolationPolicy& policy, const prox::InexactnessSpec& spec) {
  const auto eps2 = spec.relative_eps();
  if (!eps2) {
    throw InadmissibleInexactness("policy " + policy.name() +
                                  " needs a relative (or exact) prox oracle, got " +
                                  spec.describe());
  }
  return *eps2;
}

double adaptive_alpha(const ExtrapolationPolicy& policy, const moreau::EnvelopeContext& ctx,
                      const RoundSnapshot* snap) {
  if (snap == nullptr || snap->x == nullptr || snap->returned.empty()) {
    throw InvalidArgument("adaptive policy " + policy.name() + " needs the round's prox outputs");
  }
  if (snap->sampled.size() != snap->returned.size()) {
    throw DimensionMismatch("RoundSnapshot: sampled and returned sizes differ");
  }
  const Vector& x = *snap->x;
  const double gamma = ctx.gamma;
  const auto m = static_cast<double>(snap->returned.size());

  Vector mean_disp = Vector::Zero(x.size());
  double mean_sq = 0.0;
  for (const Vector& xt : snap->returned) {
    const Vector disp = x - xt;
    mean_disp += disp;
    mean_sq += disp.squaredNorm();
  }
  mean_disp /= m;
  mean_sq /= m;
  const double denom_sq = mean_disp.squaredNorm();
  if (!(denom_sq > 0.0)) {
    throw DegenerateStep("policy " + policy.name() + ": averaged displacement is zero");
  }

  if (policy.kind() == Kind::kGradientDiversity) {
    const double L = ctx.problem->L_max();
    return (1.0 + gamma * L) / (gamma * L) * mean_sq / denom_sq;
  }

  // Polyak: mean(observed M_i - inf M_i) / (gamma ||mean (x - x_tilde_i)/gamma||^2)
  // with inf M_i = 0 by the problem normalization.
  double mean_env = 0.0;
  for (std::size_t j = 0; j < snap->sampled.size(); ++j) {
    const QuadraticClient& client = ctx.problem->client(snap->sampled[j]);
    mean_env += moreau::envelope_value_at(client, x, snap->returned[j], gamma);
  }
  mean_env /= m;
  return gamma * mean_env / denom_sq;
}

}  // namespace

// ---- policy --------------------------------------------------------------------

ExtrapolationPolicy ExtrapolationPolicy::constant(double alpha) {
  if (!std::isfinite(alpha) || !(alpha > 0.0)) {
    throw InvalidArgument("constant extrapolation alpha must be finite and > 0");
  }
  return {Kind::kConstant, alpha};
}

ExtrapolationPolicy ExtrapolationPolicy::of(Kind kind) {
  if (kind == Kind::kConstant) throw InvalidArgument("constant policy needs an alpha value");
  return {kind, 0.0};
}

std::string ExtrapolationPolicy::name() const {
  for (const NamedKind& nk : kPolicyNames) {
    if (nk.kind == kind_) return nk.name;
  }
  return "unknown";
}

ExtrapolationPolicy ExtrapolationPolicy::parse(const std::string& name,
                                               std::optional<double> alpha) {
  if (name == "fedprox") return constant(1.0);
  for (const NamedKind& nk : kPolicyNames) {
    if (name != nk.name) continue;
    if (nk.kind == Kind::kConstant) {
      if (!alpha) throw InvalidArgument("policy constant requires alpha");
      return constant(*alpha);
    }
    return of(nk.kind);
  }
  throw InvalidArgument("unknown extrapolation policy '" + name + "'");
}

void RunConfig::validate(const FederatedProblem& problem) const {
  if (!std::isfinite(gamma) || !(gamma > 0.0)) throw InvalidArgument("gamma must be > 0");
  if (tau < 1 || tau > problem.n_clients()) throw InvalidArgument("tau must lie in [1, n]");
  if (x0.size() != problem.dim()) {
    throw DimensionMismatch("x0 has dimension " + std::to_string(x0.size()) + ", problem has " +
                            std::to_string(problem.dim()));
  }
  if (!numerics::all_finite(x0)) throw InvalidArgument("x0 must be finite");
}

theory::ProblemConstants constants_of(const moreau::EnvelopeContext& ctx, std::size_t tau) {
  theory::ProblemConstants c;
  c.mu = ctx.problem->mu();
  c.L_max = ctx.problem->L_max();
  c.L_gamma = ctx.L_gamma;
  c.gamma = ctx.gamma;
  c.n = ctx.problem->n_clients();
  c.tau = tau;
  return c;
}

double alpha_for(const ExtrapolationPolicy& policy, const moreau::EnvelopeContext& ctx,
                 const prox::InexactnessSpec& spec, std::size_t tau,
                 const RoundSnapshot* snapshot) {
  if (ctx.problem == nullptr) throw InvalidArgument("alpha_for: context without a problem");
  const double base = 1.0 / (ctx.gamma * ctx.L_gamma);
  switch (policy.kind()) {
    case Kind::kConstant: return policy.alpha();
    case Kind::kTheoryExact: return base;
    case Kind::kTheoryAbsolute: return 0.25 * base;
    case Kind::kTheoryRelativeSGD:
      return theory::alpha_relative_sgd(constants_of(ctx, ctx.problem->n_clients()),
                                        relative_level(policy, spec));
    case Kind::kTheoryMinibatch:
      return theory::alpha_minibatch(constants_of(ctx, tau), relative_level(policy, spec), tau);
    case Kind::kTheoryRelativeCompression:
      return theory::envelope_relative_compression(constants_of(ctx, ctx.problem->n_clients()),
                                                   relative_level(policy, spec))
          .alpha;
    case Kind::kGradientDiversity:
    case Kind::kPolyak: return adaptive_alpha(policy, ctx, snapshot);
  }
  throw InvalidArgument("alpha_for: unhandled policy");
}

// ---- engine --------------------------------------------------------------------

Engine::Engine(const FederatedProblem& problem, RunConfig config)
    : problem_(&problem), config_(std::move(config)) {
  config_.validate(problem);
  ctx_ = moreau::make_context(problem, config_.gamma);
  gap_.emplace(ctx_);
  if (!config_.policy.adaptive()) {
    fixed_alpha_ = alpha_for(config_.policy, ctx_, config_.spec, config_.tau);
  }
  x_ = config_.x0;
  initial_sq_dist_ = (x_ - problem.x_star()).squaredNorm();
  record_.iter = 0;
  measure(record_);
}

void Engine::measure(TraceRecord& record) {
  const FederatedProblem& p = *problem_;
  exact_.resize(p.n_clients());
  Vector mean_disp = Vector::Zero(x_.size());
  for (std::size_t i = 0; i < p.n_clients(); ++i) {
    exact_[i] = prox::prox_exact(p.client(i), x_, config_.gamma);
    mean_disp += x_ - exact_[i];
  }
  mean_disp /= static_cast<double>(p.n_clients());
  record.sq_dist = (x_ - p.x_star()).squaredNorm();
  record.envelope_gap = (*gap_)(x_, exact_);
  record.grad_norm = mean_disp.norm();
}

bool Engine::advance() {
  const FederatedProblem& p = *problem_;
  const std::size_t n = p.n_clients();
  const std::size_t round = k_;

  // tau-nice sampling on its own substream
  std::vector<std::size_t> sampled(n);
  std::iota(sampled.begin(), sampled.end(), std::size_t{0});
  if (config_.tau < n) {
    rng::Engine sampler = rng::substream(config_.seed, rng::Domain::kSampling, round);
    std::vector<std::size_t> chosen;
    chosen.reserve(config_.tau);
    std::sample(sampled.begin(), sampled.end(), std::back_inserter(chosen), config_.tau, sampler);
    sampled = std::move(chosen);
  }

  std::vector<Vector> returned;
  std::vector<Vector> exact_subset;
  returned.reserve(sampled.size());
  exact_subset.reserve(sampled.size());
  std::size_t local_iters = 0;
  for (std::size_t i : sampled) {
    rng::Engine injector = rng::substream(config_.seed, rng::Domain::kInjection, round, i);
    prox::ProxResult r = prox::evaluate_with_exact(config_.spec, p.client(i), x_, config_.gamma,
                                                   exact_[i], injector);
    local_iters += r.local_iters;
    returned.push_back(std::move(r.point));
    exact_subset.push_back(exact_[i]);
  }

  double alpha = 0.0;
  if (fixed_alpha_) {
    alpha = *fixed_alpha_;
  } else {
    const RoundSnapshot snap{&x_, sampled, returned};
    alpha = alpha_for(config_.policy, ctx_, config_.spec, config_.tau, &snap);
  }

  Vector mean_returned = Vector::Zero(x_.size());
  for (const Vector& xt : returned) mean_returned += xt;
  mean_returned /= static_cast<double>(returned.size());
  const Vector step = alpha * (mean_returned - x_);
  Vector x_next = x_ + step;

  const moreau::EstimatorParts parts = moreau::estimator_parts(x_, returned, exact_subset);
  const Vector via_estimator = x_ - alpha * parts.combined();
  // rounding in alpha * (mean - x) is of order eps |alpha| |x|
  const double scale = std::max({1.0, x_.norm(), std::abs(alpha) * x_.norm(), step.norm()});
  const double identity_error = (x_next - via_estimator).norm() / scale;
  if (std::isfinite(identity_error)) {
    max_identity_error_ = std::max(max_identity_error_, identity_error);
  }
#if defined(FEDEXPROX_IDENTITY_CHECKS) && FEDEXPROX_IDENTITY_CHECKS
  if (numerics::all_finite(x_next) && !(identity_error <= kIdentityTolerance)) {
    std::ostringstream os;
    os << "update rule and x - alpha g(x) differ by " << identity_error << " at round " << round;
    throw IdentityViolation(os.str());
  }
#endif

  x_ = std::move(x_next);
  ++k_;
  TraceRecord rec;
  rec.iter = k_;
  rec.alpha = alpha;
  rec.bias_norm = parts.bias.norm();
  rec.local_iters = local_iters;
  rec.sampled = std::move(sampled);

  if (!numerics::all_finite(x_)) {
    rec.sq_dist = std::numeric_limits<double>::infinity();
    rec.envelope_gap = std::numeric_limits<double>::infinity();
    rec.grad_norm = std::numeric_limits<double>::infinity();
    record_ = std::move(rec);
    return false;
  }
  measure(rec);
  record_ = std::move(rec);
  const bool finite = std::isfinite(record_.sq_dist) && std::isfinite(record_.envelope_gap) &&
                      std::isfinite(record_.grad_norm) && std::isfinite(alpha);
  if (!finite) return false;
  // With x0 = x_star only non-finite values count as divergence.
  if (initial_sq_dist_ > 0.0 && record_.sq_dist > kDivergenceFactor * initial_sq_dist_) {
    return false;
  }
  return true;
}

const TraceRecord& Engine::step() {
  if (!advance()) {
    throw DivergenceDetected("iterate diverged at round " + std::to_string(k_) +
                             " (sq_dist = " + std::to_string(record_.sq_dist) + ")");
  }
  return record_;
}

RunTrace Engine::run() {
  RunTrace trace;
  trace.records.reserve(config_.K + 1 - std::min(k_, config_.K));
  trace.records.push_back(record_);
  while (k_ < config_.K) {
    const bool ok = advance();
    trace.records.push_back(record_);
    if (!ok) {
      trace.diverged_at = k_;
      break;
    }
  }
  trace.x_final = x_;
  trace.max_identity_error = max_identity_error_;
  return trace;
}

RunTrace run(const RunConfig& config, const FederatedProblem& problem) {
  Engine engine(problem, config);
  return engine.run();
}

}  // namespace fedexprox::engine
