#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Closed-form rates, neighborhoods, admissibility conditions and slowdown
// factors for inexact FedExProx. Constants are kept exactly as derived
// (32, 12, 4, ...), never simplified to asymptotic forms, because the
// verification harness compares traces against them.

namespace fedexprox::theory {

struct ProblemConstants {
  double mu = 0.0;
  double L_max = 0.0;
  double L_gamma = 0.0;
  double gamma = 0.0;
  std::size_t n = 1;
  std::size_t tau = 1;

  // Throws InvalidArgument unless all positive, tau in [1, n], mu <= L_max
  // and mu <= L_gamma (1 + gamma L_max) (each up to 1e-9 relative slack).
  void validate() const;
};

enum class Regime { kRelSGD, kRelCompression };

// RelSGD: eps2 < mu^2 / (4 L_max^2). RelCompression: eps2 < mu / (4 L_max).
bool check_admissible(const ProblemConstants& c, Regime regime, double eps2);
double admissibility_bound(const ProblemConstants& c, Regime regime);

// (n - tau) / (tau (n - 1)); 0 when n = 1.
double sampling_factor(std::size_t n, std::size_t tau);

// ---- absolute approximation ------------------------------------------------

struct AbsoluteEnvelope {
  double alpha = 0.0;              // 1 / (4 gamma L_gamma)
  double rate = 0.0;               // 1 - mu / (32 L_gamma (1 + gamma L_max))
  double neighborhood_gap = 0.0;   // 6 eps1 (1 + gamma L_max) / (gamma mu)
  double neighborhood_dist = 0.0;  // 12 eps1 ((1/gamma + L_max) / mu)^2
  double dist_prefactor = 0.0;     // L_gamma (1 + gamma L_max) / mu

  double gap_bound(std::size_t k, double e0) const;
  double dist_bound(std::size_t k, double delta0) const;
};

AbsoluteEnvelope envelope_absolute(const ProblemConstants& c, double eps1);

// General-alpha form: rate 1 - alpha gamma mu / (8 (1 + gamma L_max)) and
// additive constant 4 eps1 (1 + gamma L_max) / mu * (2 alpha L_gamma + 1/gamma).
double absolute_rate(const ProblemConstants& c, double alpha);
double absolute_gap_constant(const ProblemConstants& c, double eps1, double alpha);

// ---- relative approximation, biased SGD view --------------------------------

// S(eps2) = (mu - 2 sqrt(eps2) L)(1 - 2 sqrt(eps2) L / mu) / (mu + 4 sqrt(eps2) L + 4 eps2 L).
double slowdown_S(const ProblemConstants& c, double eps2);
// Minibatch version with the extra sampling term in the denominator.
double slowdown_S_tau(const ProblemConstants& c, double eps2, std::size_t tau);

// Largest admissible constant alpha of the full-batch relative theorem.
double alpha_relative_sgd(const ProblemConstants& c, double eps2);
// Largest admissible alpha of the tau-nice theorem.
double alpha_minibatch(const ProblemConstants& c, double eps2, std::size_t tau);
// 1 - alpha gamma (mu - 2 sqrt(eps2) L_max) / (4 (1 + gamma L_max)); also the
// per-step factor behind the tau-nice theorem.
double relative_sgd_rate(const ProblemConstants& c, double eps2, double alpha);
// Expected-gap contraction of the tau-nice theorem at its largest alpha:
// 1 - mu / (4 L_gamma (1 + gamma L_max)) * S(eps2, tau).
double minibatch_rate(const ProblemConstants& c, double eps2, std::size_t tau);

// ---- relative approximation, biased compression view -------------------------

// 1 - (1 - 4 eps2 L_max / mu) gamma mu alpha / (4 (1 + gamma L_max)).
double relative_compression_rate(const ProblemConstants& c, double eps2, double alpha);

struct CompressionEnvelope {
  double alpha = 0.0;           // 1 / (gamma L_gamma)
  double rate = 0.0;            // 1 - (1 - 4 eps2 L/mu) mu / (4 L_gamma (1 + gamma L))
  double dist_prefactor = 0.0;  // L_gamma (1 + gamma L_max) / mu

  double gap_bound(std::size_t k, double e0) const;
  double dist_bound(std::size_t k, double delta0) const;
};
CompressionEnvelope envelope_relative_compression(const ProblemConstants& c, double eps2);

// Exact FedExProx: compression envelope with eps2 = 0.
CompressionEnvelope envelope_exact(const ProblemConstants& c);

// ---- comparison table --------------------------------------------------------

struct RateRow {
  std::string algorithm;
  bool admissible = true;
  double alpha = 0.0;
  double contraction = 0.0;
  double neighborhood = 0.0;
  double inexactness_bound = 0.0;  // 0 when the regime has none
  std::string note;
};

std::vector<RateRow> rate_comparison_report(const ProblemConstants& c, double eps1, double eps2);
std::string format_report(const ProblemConstants& c, const std::vector<RateRow>& rows,
                          double eps1, double eps2);

// k-th power of a contraction factor, exact at k = 0.
double power(double rate, std::size_t k);

}  // namespace fedexprox::theory
