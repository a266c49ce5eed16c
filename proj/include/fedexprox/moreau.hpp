#pragma once

#include <span>
#include <vector>

#include "fedexprox/problem.hpp"

namespace fedexprox::moreau {

// Everything the Moreau-envelope analytics need for one (problem, gamma).
// M_inf is 0 because every generated f_i vanishes at x_star.
struct EnvelopeContext {
  const FederatedProblem* problem = nullptr;
  double gamma = 0.0;
  double L_gamma = 0.0;
  double M_inf = 0.0;
};

// Computes L_gamma and checks that M^gamma(x_star) matches M_inf to 1e-10.
EnvelopeContext make_context(const FederatedProblem& problem, double gamma);

// f_i(p) + ||x - p||^2 / (2 gamma) with p the exact prox of x.
double envelope_value(const EnvelopeContext& ctx, std::size_t i, const Vector& x);
// Same formula with p supplied by the caller.
double envelope_value_at(const QuadraticClient& client, const Vector& x, const Vector& prox_point,
                         double gamma);

// (x - p) / gamma.
Vector envelope_grad(const EnvelopeContext& ctx, std::size_t i, const Vector& x);

// (1/n) sum_i M^gamma_{f_i}(x).
double global_envelope_value(const EnvelopeContext& ctx, const Vector& x);

// gamma M^gamma(x) - gamma M_inf.
double global_envelope_gap(const EnvelopeContext& ctx, const Vector& x);
double global_envelope_gap_at(const EnvelopeContext& ctx, const Vector& x,
                              std::span<const Vector> exact_proxes);

// Envelope gap from exact proxes, written in coordinates centered at x_star:
// f_i(p) = 1/2 e^T A_i e + r_i^T e + f_i(x_star) with e = p - x_star,
// r_i = A_i x_star + b_i, and A_i p taken from the prox equation. Keeps full
// relative accuracy as x -> x_star and costs no matrix-vector products.
class GapEvaluator {
 public:
  explicit GapEvaluator(const EnvelopeContext& ctx);
  double operator()(const Vector& x, std::span<const Vector> exact_proxes) const;

 private:
  const EnvelopeContext* ctx_;
  std::vector<Vector> residual_;
  std::vector<double> value_at_star_;
};

// g = (1/|S|) sum_{i in S} (x - x_tilde_i).
Vector estimator_g(const Vector& x, std::span<const Vector> approximations);

// g split into its gradient and bias parts, each accumulated term by term:
// (1/|S|) sum gamma grad M_i(x)  -  (1/|S|) sum (x_tilde_i - prox_i(x)).
struct EstimatorParts {
  Vector gradient;
  Vector bias;
  Vector combined() const { return gradient - bias; }
};
EstimatorParts estimator_parts(const Vector& x, std::span<const Vector> approximations,
                               std::span<const Vector> exact_proxes);
// Convenience overload that computes prox_i for the client subset itself.
EstimatorParts estimator_parts(const EnvelopeContext& ctx, const Vector& x,
                               std::span<const std::size_t> subset,
                               std::span<const Vector> approximations);

}  // namespace fedexprox::moreau
