#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fedexprox/numerics.hpp"

namespace fedexprox {

using numerics::SymMatrix;

// f_i(x) = 1/2 x^T A x + b^T x + c with A PSD.
class QuadraticClient {
 public:
  // Computes L = lambda_max(A) with the power-iteration eigensolver and
  // rejects A that is not PSD within tol_psd.
  QuadraticClient(SymMatrix a, Vector b, double c);
  // Trusts a spectrum known by construction (used by the generator).
  QuadraticClient(SymMatrix a, Vector b, double c, numerics::EigenRange known_spectrum);

  const SymMatrix& A() const { return a_; }
  const Vector& b() const { return b_; }
  double c() const { return c_; }
  double smoothness() const { return smoothness_; }
  Index dim() const { return a_.dim(); }

  double value(const Vector& x) const;
  // A x + b.
  Vector gradient(const Vector& x) const;

  // Cached Cholesky factor of (A + I / gamma).
  std::shared_ptr<const numerics::ShiftedCholesky> prox_factor(double gamma) const;

 private:
  SymMatrix a_;
  Vector b_;
  double c_ = 0.0;
  double smoothness_ = 0.0;
  std::shared_ptr<numerics::FactorCache> cache_;
};

struct Spectrum {
  double lambda_lo = 0.0;
  double lambda_hi = 10.0;
  double rank_fraction = 0.5;
};

// n clients sharing the minimizer x_star (interpolation regime).
class FederatedProblem {
 public:
  // Validates interpolation at x_star and strict convexity of the average.
  FederatedProblem(std::vector<QuadraticClient> clients, Vector x_star, std::uint64_t seed = 0,
                   Spectrum spectrum = {});

  const std::vector<QuadraticClient>& clients() const { return clients_; }
  const QuadraticClient& client(std::size_t i) const;
  const Vector& x_star() const { return x_star_; }
  double L_max() const { return l_max_; }
  double mu() const { return mu_; }
  Index dim() const { return x_star_.size(); }
  std::size_t n_clients() const { return clients_.size(); }
  std::uint64_t seed() const { return seed_; }
  const Spectrum& spectrum() const { return spectrum_; }

  // (1/n) sum_i A_i.
  SymMatrix average_hessian() const;
  // max_i ||A_i x_star + b_i|| / (1 + ||b_i||).
  double interpolation_residual() const;

 private:
  std::vector<QuadraticClient> clients_;
  Vector x_star_;
  double l_max_ = 0.0;
  double mu_ = 0.0;
  std::uint64_t seed_ = 0;
  Spectrum spectrum_;
};

// Relative tolerance for every spectral constant the problem computes.
inline constexpr double kSpectralTolerance = 1e-10;

FederatedProblem generate_interpolated(std::size_t n, Index d, std::uint64_t seed,
                                       const Spectrum& spectrum);

Vector grad_client(const FederatedProblem& p, std::size_t i, const Vector& x);
double value_client(const FederatedProblem& p, std::size_t i, const Vector& x);
double value_global(const FederatedProblem& p, const Vector& x);

struct MoreauSmoothness {
  double L_gamma = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
};

// L_gamma = lambda_max((1/n) sum A_i (I + gamma A_i)^{-1}) together with the
// bracket (1/n^2) sum L_i/(1+gamma L_i) <= L_gamma <= (1/n) sum L_i/(1+gamma L_i).
MoreauSmoothness moreau_smoothness(const FederatedProblem& p, double gamma);

// Envelope Hessian (1/n) sum A_i (I + gamma A_i)^{-1}.
SymMatrix envelope_hessian(const FederatedProblem& p, double gamma);

}  // namespace fedexprox
