#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "fedexprox/problem.hpp"
#include "fedexprox/rng.hpp"

namespace fedexprox::prox {

// Accuracy a local solver must reach: squared distance to the exact prox
// at most eps (absolute), or at most eps * ||x - prox||^2 (relative).
struct Target {
  enum class Kind { kAbsolute, kRelative };
  Kind kind = Kind::kRelative;
  double eps = 0.0;

  static Target absolute(double eps1) { return {Kind::kAbsolute, eps1}; }
  static Target relative(double eps2) { return {Kind::kRelative, eps2}; }
};

enum class Mode { kExact, kAbsoluteInjected, kRelativeInjected, kSolverGD, kSolverAGD };

class InexactnessSpec {
 public:
  static InexactnessSpec exact();
  static InexactnessSpec absolute_injected(double eps1);
  static InexactnessSpec relative_injected(double eps2);
  static InexactnessSpec solver_gd(Target target);
  static InexactnessSpec solver_agd(Target target);

  Mode mode() const { return mode_; }
  // For kExact the target is relative with eps = 0.
  const Target& target() const { return target_; }
  bool targets_relative() const { return target_.kind == Target::Kind::kRelative; }

  // eps2 of the relative criterion (0 for exact), empty for absolute modes.
  std::optional<double> relative_eps() const;
  // eps1 of the absolute criterion (0 for exact), empty for relative modes.
  std::optional<double> absolute_eps() const;

  std::string describe() const;

 private:
  InexactnessSpec(Mode mode, Target target);
  Mode mode_ = Mode::kExact;
  Target target_{};
};

struct Criterion {
  enum class Kind { kExact, kAbsolute, kRelative };
  Kind kind = Kind::kExact;
  // Squared distance (absolute) or squared-distance ratio (relative) reached.
  double achieved = 0.0;
};

struct ProxResult {
  Vector point;
  Vector exact_point;
  std::size_t local_iters = 0;
  Criterion criterion_met{};
};

// (A + I/gamma)^{-1} (x/gamma - b) via the client's cached factor.
Vector prox_exact(const QuadraticClient& client, const Vector& x, double gamma);

// Gradient descent on f(z) + ||z - x||^2 / (2 gamma) from z0 = x with step
// gamma / (1 + gamma L). Throws IterationCapExceeded past the theory bound + 1.
// A squared error at the floating-point resolution of the subproblem,
// (16 eps_mach (1 + gamma L) (|x| + |prox| + gamma |b|))^2, also counts as
// meeting the target, so relative targets stay reachable as x -> prox(x).
ProxResult prox_gd(const QuadraticClient& client, const Vector& x, double gamma, Target target);
ProxResult prox_gd(const QuadraticClient& client, const Vector& x, double gamma, Target target,
                   const Vector& exact_point);

// Constant-momentum Nesterov iteration on the same subproblem.
ProxResult prox_agd(const QuadraticClient& client, const Vector& x, double gamma, Target target);
ProxResult prox_agd(const QuadraticClient& client, const Vector& x, double gamma, Target target,
                    const Vector& exact_point);

// exact + u with ||u||^2 = eps1 (on the boundary, never outside it).
Vector inject_absolute(const Vector& exact, double eps1, rng::Engine& engine);
// exact + u with ||u||^2 = eps2 ||center_x - exact||^2.
Vector inject_relative(const Vector& exact, const Vector& center_x, double eps2,
                       rng::Engine& engine);

ProxResult evaluate(const InexactnessSpec& spec, const QuadraticClient& client, const Vector& x,
                    double gamma, rng::Engine& engine);
// Same, reusing an already computed exact prox of x.
ProxResult evaluate_with_exact(const InexactnessSpec& spec, const QuadraticClient& client,
                               const Vector& x, double gamma, const Vector& exact_point,
                               rng::Engine& engine);

// Smallest t with (1 - 1/(1+gamma L))^t dist0_sq <= eps1 (absolute) or
// (1 - 1/(1+gamma L))^t <= eps2 (relative).
std::size_t local_complexity_gd(double smoothness, double gamma, Target target, double dist0_sq);
// Smallest t with 2(1+gamma L)(1 - 1/sqrt(1+gamma L))^t dist0_sq <= eps1, or
// 2(1+gamma L)(1 - 1/sqrt(1+gamma L))^t <= eps2.
std::size_t local_complexity_agd(double smoothness, double gamma, Target target, double dist0_sq);

// ||gamma grad f(x)||^2, an upper bound on ||x - prox(x)||^2.
double dist0_upper_bound(const QuadraticClient& client, const Vector& x, double gamma);

}  // namespace fedexprox::prox
