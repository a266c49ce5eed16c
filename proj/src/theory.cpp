#include "fedexprox/theory.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "fedexprox/errors.hpp"

namespace fedexprox::theory {
namespace {

constexpr double kSlack = 1e-9;

void require_eps2(double eps2) {
  if (!std::isfinite(eps2) || eps2 < 0.0) throw InvalidArgument("eps2 must be finite and >= 0");
}

void require_admissible(const ProblemConstants& c, Regime regime, double eps2, const char* who) {
  require_eps2(eps2);
  if (!check_admissible(c, regime, eps2)) {
    std::ostringstream os;
    os.precision(6);
    os << who << ": eps2 = " << eps2 << " violates eps2 < " << admissibility_bound(c, regime);
    throw InadmissibleInexactness(os.str());
  }
}

void require_tau(const ProblemConstants& c, std::size_t tau) {
  if (tau < 1 || tau > c.n) throw InvalidArgument("tau must lie in [1, n]");
}

double dist_prefactor(const ProblemConstants& c) {
  return c.L_gamma * (1.0 + c.gamma * c.L_max) / c.mu;
}

// Denominator shared by the S factors and the relative-theory alpha bounds.
double relative_denominator(const ProblemConstants& c, double eps2, std::size_t tau) {
  const double r = std::sqrt(eps2);
  const double L = c.L_max;
  const double base = c.mu + 4.0 * r * L + 4.0 * eps2 * L;
  return base + sampling_factor(c.n, tau) * (4.0 * L + 4.0 * r * L - c.mu);
}

}  // namespace

void ProblemConstants::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(mu) || !positive(L_max) || !positive(L_gamma) || !positive(gamma)) {
    throw InvalidArgument("problem constants mu, L_max, L_gamma, gamma must be positive");
  }
  if (n < 1 || tau < 1 || tau > n) throw InvalidArgument("need n >= 1 and 1 <= tau <= n");
  if (mu > L_max * (1.0 + kSlack)) throw InvalidArgument("mu exceeds L_max");
  if (mu > L_gamma * (1.0 + gamma * L_max) * (1.0 + kSlack)) {
    throw InvalidArgument("mu exceeds L_gamma (1 + gamma L_max)");
  }
}

double admissibility_bound(const ProblemConstants& c, Regime regime) {
  if (regime == Regime::kRelSGD) return c.mu * c.mu / (4.0 * c.L_max * c.L_max);
  return c.mu / (4.0 * c.L_max);
}

bool check_admissible(const ProblemConstants& c, Regime regime, double eps2) {
  require_eps2(eps2);
  return eps2 < admissibility_bound(c, regime);
}

double sampling_factor(std::size_t n, std::size_t tau) {
  if (n <= 1) return 0.0;
  const auto nd = static_cast<double>(n);
  const auto td = static_cast<double>(tau);
  return (nd - td) / (td * (nd - 1.0));
}

double power(double rate, std::size_t k) {
  double out = 1.0;
  double base = rate;
  // binary exponentiation keeps k = 0 exact and large k cheap
  while (k > 0) {
    if (k & 1U) out *= base;
    base *= base;
    k >>= 1U;
  }
  return out;
}

// ---- absolute ----------------------------------------------------------------

double absolute_rate(const ProblemConstants& c, double alpha) {
  return 1.0 - alpha * c.gamma * c.mu / (8.0 * (1.0 + c.gamma * c.L_max));
}

double absolute_gap_constant(const ProblemConstants& c, double eps1, double alpha) {
  return 4.0 * eps1 * (1.0 + c.gamma * c.L_max) / c.mu * (2.0 * alpha * c.L_gamma + 1.0 / c.gamma);
}

AbsoluteEnvelope envelope_absolute(const ProblemConstants& c, double eps1) {
  c.validate();
  if (!std::isfinite(eps1) || eps1 < 0.0) throw InvalidArgument("eps1 must be finite and >= 0");
  AbsoluteEnvelope env;
  env.alpha = 1.0 / (4.0 * c.gamma * c.L_gamma);
  env.rate = 1.0 - c.mu / (32.0 * c.L_gamma * (1.0 + c.gamma * c.L_max));
  env.neighborhood_gap = 6.0 * eps1 * (1.0 + c.gamma * c.L_max) / (c.gamma * c.mu);
  const double ratio = (1.0 / c.gamma + c.L_max) / c.mu;
  env.neighborhood_dist = 12.0 * eps1 * ratio * ratio;
  env.dist_prefactor = dist_prefactor(c);
  return env;
}

double AbsoluteEnvelope::gap_bound(std::size_t k, double e0) const {
  return power(rate, k) * e0 + neighborhood_gap;
}

double AbsoluteEnvelope::dist_bound(std::size_t k, double delta0) const {
  return power(rate, k) * dist_prefactor * delta0 + neighborhood_dist;
}

// ---- relative, SGD view -------------------------------------------------------

double slowdown_S(const ProblemConstants& c, double eps2) {
  return slowdown_S_tau(c, eps2, c.n);
}

double slowdown_S_tau(const ProblemConstants& c, double eps2, std::size_t tau) {
  require_tau(c, tau);
  require_admissible(c, Regime::kRelSGD, eps2, "slowdown_S");
  const double r = std::sqrt(eps2);
  const double num = (c.mu - 2.0 * r * c.L_max) * (1.0 - 2.0 * r * c.L_max / c.mu);
  return num / relative_denominator(c, eps2, tau);
}

double alpha_relative_sgd(const ProblemConstants& c, double eps2) {
  return alpha_minibatch(c, eps2, c.n);
}

double alpha_minibatch(const ProblemConstants& c, double eps2, std::size_t tau) {
  require_tau(c, tau);
  require_admissible(c, Regime::kRelSGD, eps2, "relative-theory alpha");
  const double num = c.mu - 2.0 * std::sqrt(eps2) * c.L_max;
  return num / relative_denominator(c, eps2, tau) / (c.gamma * c.L_gamma);
}

double relative_sgd_rate(const ProblemConstants& c, double eps2, double alpha) {
  require_eps2(eps2);
  return 1.0 - alpha * c.gamma * (c.mu - 2.0 * std::sqrt(eps2) * c.L_max) /
                   (4.0 * (1.0 + c.gamma * c.L_max));
}

double minibatch_rate(const ProblemConstants& c, double eps2, std::size_t tau) {
  return 1.0 - c.mu / (4.0 * c.L_gamma * (1.0 + c.gamma * c.L_max)) * slowdown_S_tau(c, eps2, tau);
}

// ---- relative, compression view -----------------------------------------------

double relative_compression_rate(const ProblemConstants& c, double eps2, double alpha) {
  require_eps2(eps2);
  return 1.0 - (1.0 - 4.0 * eps2 * c.L_max / c.mu) * c.gamma * c.mu * alpha /
                   (4.0 * (1.0 + c.gamma * c.L_max));
}

CompressionEnvelope envelope_relative_compression(const ProblemConstants& c, double eps2) {
  c.validate();
  require_admissible(c, Regime::kRelCompression, eps2, "envelope_relative_compression");
  CompressionEnvelope env;
  env.alpha = 1.0 / (c.gamma * c.L_gamma);
  env.rate = relative_compression_rate(c, eps2, env.alpha);
  env.dist_prefactor = dist_prefactor(c);
  return env;
}

CompressionEnvelope envelope_exact(const ProblemConstants& c) {
  return envelope_relative_compression(c, 0.0);
}

double CompressionEnvelope::gap_bound(std::size_t k, double e0) const {
  return power(rate, k) * e0;
}

double CompressionEnvelope::dist_bound(std::size_t k, double delta0) const {
  return power(rate, k) * dist_prefactor * delta0;
}

// ---- report ---------------------------------------------------------------------

std::vector<RateRow> rate_comparison_report(const ProblemConstants& c, double eps1, double eps2) {
  c.validate();
  std::vector<RateRow> rows;

  const CompressionEnvelope exact = envelope_exact(c);
  rows.push_back({"FedExProx (exact)", true, exact.alpha, exact.rate, 0.0, 0.0, ""});

  const AbsoluteEnvelope abs = envelope_absolute(c, eps1);
  rows.push_back({"absolute eps1", true, abs.alpha, abs.rate, abs.neighborhood_dist, 0.0,
                  "neighborhood in squared distance"});

  RateRow sgd{"relative eps2 (biased SGD)", false, 0.0, 0.0, 0.0,
              admissibility_bound(c, Regime::kRelSGD), ""};
  if (check_admissible(c, Regime::kRelSGD, eps2)) {
    sgd.admissible = true;
    sgd.alpha = alpha_relative_sgd(c, eps2);
    sgd.contraction = relative_sgd_rate(c, eps2, sgd.alpha);
    std::ostringstream note;
    note.precision(6);
    note << "S(eps2) = " << slowdown_S(c, eps2);
    sgd.note = note.str();
  } else {
    sgd.note = "inadmissible";
  }
  rows.push_back(sgd);

  RateRow comp{"relative eps2 (biased compression)", false, 0.0, 0.0, 0.0,
               admissibility_bound(c, Regime::kRelCompression), ""};
  if (check_admissible(c, Regime::kRelCompression, eps2)) {
    const CompressionEnvelope env = envelope_relative_compression(c, eps2);
    comp.admissible = true;
    comp.alpha = env.alpha;
    comp.contraction = env.rate;
  } else {
    comp.note = "inadmissible";
  }
  rows.push_back(comp);
  return rows;
}

std::string format_report(const ProblemConstants& c, const std::vector<RateRow>& rows,
                          double eps1, double eps2) {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof line,
                "mu = %.6g  L_max = %.6g  L_gamma = %.6g  gamma = %.6g  n = %zu  tau = %zu\n"
                "eps1 = %.6g  eps2 = %.6g\n",
                c.mu, c.L_max, c.L_gamma, c.gamma, c.n, c.tau, eps1, eps2);
  os << line;
  std::snprintf(line, sizeof line, "%-36s %14s %18s %14s %14s  %s\n", "algorithm", "alpha",
                "contraction", "neighborhood", "eps bound", "note");
  os << line;
  for (const RateRow& r : rows) {
    if (r.admissible) {
      std::snprintf(line, sizeof line, "%-36s %14.6g %18.12f %14.6g %14.6g  %s\n",
                    r.algorithm.c_str(), r.alpha, r.contraction, r.neighborhood,
                    r.inexactness_bound, r.note.c_str());
    } else {
      std::snprintf(line, sizeof line, "%-36s %14s %18s %14s %14.6g  %s\n", r.algorithm.c_str(),
                    "-", "-", "-", r.inexactness_bound, r.note.c_str());
    }
    os << line;
  }
  return os.str();
}

}  // namespace fedexprox::theory
