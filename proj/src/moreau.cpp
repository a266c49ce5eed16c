#include "fedexprox/moreau.hpp"

#include <cmath>
#include <string>

#include "fedexprox/errors.hpp"
#include "fedexprox/prox.hpp"

namespace fedexprox::moreau {
namespace {

const FederatedProblem& problem_of(const EnvelopeContext& ctx) {
  if (ctx.problem == nullptr) throw InvalidArgument("EnvelopeContext without a problem");
  return *ctx.problem;
}

}  // namespace

EnvelopeContext make_context(const FederatedProblem& problem, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("make_context: gamma must be > 0");
  EnvelopeContext ctx;
  ctx.problem = &problem;
  ctx.gamma = gamma;
  ctx.L_gamma = moreau_smoothness(problem, gamma).L_gamma;
  ctx.M_inf = 0.0;
  const double at_star = global_envelope_value(ctx, problem.x_star());
  if (!(std::abs(at_star - ctx.M_inf) <= 1e-10)) {
    throw InvalidArgument("make_context: M^gamma(x_star) = " + std::to_string(at_star) +
                          " but the problem normalization requires 0");
  }
  return ctx;
}

double envelope_value_at(const QuadraticClient& client, const Vector& x, const Vector& prox_point,
                         double gamma) {
  return client.value(prox_point) + (x - prox_point).squaredNorm() / (2.0 * gamma);
}

double envelope_value(const EnvelopeContext& ctx, std::size_t i, const Vector& x) {
  const QuadraticClient& client = problem_of(ctx).client(i);
  return envelope_value_at(client, x, prox::prox_exact(client, x, ctx.gamma), ctx.gamma);
}

Vector envelope_grad(const EnvelopeContext& ctx, std::size_t i, const Vector& x) {
  const QuadraticClient& client = problem_of(ctx).client(i);
  return (x - prox::prox_exact(client, x, ctx.gamma)) / ctx.gamma;
}

double global_envelope_value(const EnvelopeContext& ctx, const Vector& x) {
  const FederatedProblem& p = problem_of(ctx);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.n_clients(); ++i) sum += envelope_value(ctx, i, x);
  return sum / static_cast<double>(p.n_clients());
}

double global_envelope_gap(const EnvelopeContext& ctx, const Vector& x) {
  return ctx.gamma * global_envelope_value(ctx, x) - ctx.gamma * ctx.M_inf;
}

double global_envelope_gap_at(const EnvelopeContext& ctx, const Vector& x,
                              std::span<const Vector> exact_proxes) {
  const FederatedProblem& p = problem_of(ctx);
  if (exact_proxes.size() != p.n_clients()) {
    throw DimensionMismatch("global_envelope_gap_at: need one prox per client");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.n_clients(); ++i) {
    sum += envelope_value_at(p.client(i), x, exact_proxes[i], ctx.gamma);
  }
  return ctx.gamma * sum / static_cast<double>(p.n_clients()) - ctx.gamma * ctx.M_inf;
}

GapEvaluator::GapEvaluator(const EnvelopeContext& ctx) : ctx_(&ctx) {
  const FederatedProblem& p = problem_of(ctx);
  residual_.reserve(p.n_clients());
  value_at_star_.reserve(p.n_clients());
  for (const QuadraticClient& client : p.clients()) {
    residual_.push_back(client.gradient(p.x_star()));
    value_at_star_.push_back(client.value(p.x_star()));
  }
}

double GapEvaluator::operator()(const Vector& x, std::span<const Vector> exact_proxes) const {
  const FederatedProblem& p = problem_of(*ctx_);
  if (exact_proxes.size() != p.n_clients()) {
    throw DimensionMismatch("GapEvaluator: need one prox per client");
  }
  const double gamma = ctx_->gamma;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.n_clients(); ++i) {
    const Vector& prox = exact_proxes[i];
    const Vector e = prox - p.x_star();
    const Vector disp = x - prox;
    // A e = (x - p)/gamma - r from (A + I/gamma) p = x/gamma - b
    const double f = 0.5 * e.dot(disp) / gamma + 0.5 * residual_[i].dot(e) + value_at_star_[i];
    sum += f + disp.squaredNorm() / (2.0 * gamma);
  }
  return gamma * sum / static_cast<double>(p.n_clients()) - gamma * ctx_->M_inf;
}

Vector estimator_g(const Vector& x, std::span<const Vector> approximations) {
  if (approximations.empty()) throw InvalidArgument("estimator_g: empty client subset");
  Vector sum = Vector::Zero(x.size());
  for (const Vector& approx : approximations) {
    numerics::require_same_dim(x.size(), approx.size(), "estimator_g");
    sum += x - approx;
  }
  return sum / static_cast<double>(approximations.size());
}

EstimatorParts estimator_parts(const Vector& x, std::span<const Vector> approximations,
                               std::span<const Vector> exact_proxes) {
  if (approximations.empty() || approximations.size() != exact_proxes.size()) {
    throw DimensionMismatch("estimator_parts: approximations and proxes must pair up");
  }
  EstimatorParts parts{Vector::Zero(x.size()), Vector::Zero(x.size())};
  for (std::size_t k = 0; k < approximations.size(); ++k) {
    numerics::require_same_dim(x.size(), approximations[k].size(), "estimator_parts");
    numerics::require_same_dim(x.size(), exact_proxes[k].size(), "estimator_parts");
    parts.gradient += x - exact_proxes[k];
    parts.bias += approximations[k] - exact_proxes[k];
  }
  const auto m = static_cast<double>(approximations.size());
  parts.gradient /= m;
  parts.bias /= m;
  return parts;
}

EstimatorParts estimator_parts(const EnvelopeContext& ctx, const Vector& x,
                               std::span<const std::size_t> subset,
                               std::span<const Vector> approximations) {
  const FederatedProblem& p = problem_of(ctx);
  std::vector<Vector> proxes;
  proxes.reserve(subset.size());
  for (std::size_t i : subset) proxes.push_back(prox::prox_exact(p.client(i), x, ctx.gamma));
  return estimator_parts(x, approximations, proxes);
}

}  // namespace fedexprox::moreau
