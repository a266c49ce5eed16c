#include "fedexprox/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fedexprox/errors.hpp"

namespace fedexprox::prox {
namespace {

void validate_target(const Target& target, bool solver) {
  if (!std::isfinite(target.eps) || target.eps < 0.0) {
    throw InvalidArgument("inexactness level must be finite and >= 0");
  }
  if (target.kind == Target::Kind::kRelative && !(target.eps < 1.0)) {
    throw InvalidArgument("relative inexactness eps2 must lie in [0, 1)");
  }
  if (solver && !(target.eps > 0.0)) {
    throw InvalidArgument("local solver targets need eps > 0");
  }
}

// Smallest t >= 0 with prefactor * rho^t * dist <= eps.
std::size_t smallest_decay_steps(double prefactor, double rho, double dist, double eps) {
  if (prefactor * dist <= eps) return 0;
  if (rho <= 0.0) return 1;
  if (!(eps > 0.0)) {
    throw InvalidArgument("local complexity: target eps = 0 is unattainable from a nonzero start");
  }
  auto holds = [&](double t) { return prefactor * std::pow(rho, t) * dist <= eps; };
  double t = std::ceil(std::log(eps / (prefactor * dist)) / std::log(rho));
  if (!(t >= 1.0)) t = 1.0;
  while (t > 1.0 && holds(t - 1.0)) t -= 1.0;
  while (!holds(t)) t += 1.0;
  return static_cast<std::size_t>(t);
}

double squared_bound(const Target& target, double dist0_sq) {
  return target.kind == Target::Kind::kAbsolute ? target.eps : target.eps * dist0_sq;
}

Criterion make_criterion(const Target& target, double err_sq, double dist0_sq) {
  if (target.kind == Target::Kind::kAbsolute) return {Criterion::Kind::kAbsolute, err_sq};
  return {Criterion::Kind::kRelative, dist0_sq > 0.0 ? err_sq / dist0_sq : 0.0};
}

// Squared distance below which the iterates cannot be told apart from the
// exact prox in floating point: rounding in every step is amplified by up to
// the subproblem condition number 1 + gamma L.
double resolution_floor(const QuadraticClient& client, const Vector& x, const Vector& exact,
                        double gamma) {
  const double scale = x.norm() + exact.norm() + gamma * client.b().norm();
  const double r = 16.0 * std::numeric_limits<double>::epsilon() *
                   (1.0 + gamma * client.smoothness()) * scale;
  return r * r;
}

// exact + u, |u|^2 = radius_sq, pulled back inside the bound if rounding in
// the addition pushed the realized distance past it.
Vector place_on_boundary(const Vector& exact, double radius_sq, rng::Engine& engine) {
  if (!(radius_sq > 0.0)) return exact;
  Vector u = std::sqrt(radius_sq) * rng::unit_sphere(exact.size(), engine);
  Vector point = exact + u;
  for (int attempt = 0; attempt < 16; ++attempt) {
    const double realized = (point - exact).squaredNorm();
    if (realized <= radius_sq) return point;
    u *= std::sqrt(radius_sq / realized) * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
    point = exact + u;
  }
  return exact + 0.5 * u;
}

enum class Method { kGradient, kNesterov };

ProxResult run_local_solver(Method method, const QuadraticClient& client, const Vector& x,
                            double gamma, Target target, const Vector& exact_point) {
  if (!(gamma > 0.0)) throw InvalidArgument("prox step gamma must be > 0");
  validate_target(target, true);
  numerics::require_same_dim(client.dim(), x.size(), "local prox solver");
  const double dist0_sq = (x - exact_point).squaredNorm();
  const double bound = std::max(squared_bound(target, dist0_sq),
                                resolution_floor(client, x, exact_point, gamma));

  ProxResult result;
  result.exact_point = exact_point;
  Vector z = x;
  double err_sq = dist0_sq;
  if (err_sq <= bound) {
    result.point = std::move(z);
    result.criterion_met = make_criterion(target, err_sq, dist0_sq);
    return result;
  }

  const double smoothness = client.smoothness();
  const double condition = 1.0 + gamma * smoothness;
  const double step = gamma / condition;
  const std::size_t cap =
      (method == Method::kGradient ? local_complexity_gd(smoothness, gamma, target, dist0_sq)
                                   : local_complexity_agd(smoothness, gamma, target, dist0_sq)) +
      1;
  const double inv_gamma = 1.0 / gamma;
  auto subproblem_grad = [&](const Vector& y) -> Vector {
    return client.A() * y + client.b() + inv_gamma * (y - x);
  };

  const double sq = std::sqrt(condition);
  const double momentum = (sq - 1.0) / (sq + 1.0);
  Vector z_prev = z;
  for (std::size_t t = 1; t <= cap; ++t) {
    if (method == Method::kGradient) {
      z -= step * subproblem_grad(z);
    } else {
      Vector y = z + momentum * (z - z_prev);
      z_prev = z;
      z = y - step * subproblem_grad(y);
    }
    err_sq = (z - exact_point).squaredNorm();
    if (err_sq <= bound) {
      result.point = std::move(z);
      result.local_iters = t;
      result.criterion_met = make_criterion(target, err_sq, dist0_sq);
      return result;
    }
  }
  throw IterationCapExceeded("local " +
                             std::string(method == Method::kGradient ? "GD" : "AGD") +
                             " solver exceeded its theoretical cap of " + std::to_string(cap) +
                             " iterations");
}

}  // namespace

InexactnessSpec::InexactnessSpec(Mode mode, Target target) : mode_(mode), target_(target) {}

InexactnessSpec InexactnessSpec::exact() { return {Mode::kExact, Target::relative(0.0)}; }

InexactnessSpec InexactnessSpec::absolute_injected(double eps1) {
  const Target t = Target::absolute(eps1);
  validate_target(t, false);
  return {Mode::kAbsoluteInjected, t};
}

InexactnessSpec InexactnessSpec::relative_injected(double eps2) {
  const Target t = Target::relative(eps2);
  validate_target(t, false);
  return {Mode::kRelativeInjected, t};
}

InexactnessSpec InexactnessSpec::solver_gd(Target target) {
  validate_target(target, true);
  return {Mode::kSolverGD, target};
}

InexactnessSpec InexactnessSpec::solver_agd(Target target) {
  validate_target(target, true);
  return {Mode::kSolverAGD, target};
}

std::optional<double> InexactnessSpec::relative_eps() const {
  if (mode_ == Mode::kExact) return 0.0;
  if (target_.kind == Target::Kind::kRelative) return target_.eps;
  return std::nullopt;
}

std::optional<double> InexactnessSpec::absolute_eps() const {
  if (mode_ == Mode::kExact) return 0.0;
  if (target_.kind == Target::Kind::kAbsolute) return target_.eps;
  return std::nullopt;
}

std::string InexactnessSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (mode_) {
    case Mode::kExact: return "exact";
    case Mode::kAbsoluteInjected: os << "abs-inject(" << target_.eps << ")"; break;
    case Mode::kRelativeInjected: os << "rel-inject(" << target_.eps << ")"; break;
    case Mode::kSolverGD:
      os << (targets_relative() ? "gd-rel(" : "gd-abs(") << target_.eps << ")";
      break;
    case Mode::kSolverAGD:
      os << (targets_relative() ? "agd-rel(" : "agd-abs(") << target_.eps << ")";
      break;
  }
  return os.str();
}

Vector prox_exact(const QuadraticClient& client, const Vector& x, double gamma) {
  numerics::require_same_dim(client.dim(), x.size(), "prox_exact");
  const auto factor = client.prox_factor(gamma);
  return factor->solve(Vector(x / gamma - client.b()));
}

ProxResult prox_gd(const QuadraticClient& client, const Vector& x, double gamma, Target target) {
  return prox_gd(client, x, gamma, target, prox_exact(client, x, gamma));
}

ProxResult prox_gd(const QuadraticClient& client, const Vector& x, double gamma, Target target,
                   const Vector& exact_point) {
  return run_local_solver(Method::kGradient, client, x, gamma, target, exact_point);
}

ProxResult prox_agd(const QuadraticClient& client, const Vector& x, double gamma, Target target) {
  return prox_agd(client, x, gamma, target, prox_exact(client, x, gamma));
}

ProxResult prox_agd(const QuadraticClient& client, const Vector& x, double gamma, Target target,
                    const Vector& exact_point) {
  return run_local_solver(Method::kNesterov, client, x, gamma, target, exact_point);
}

Vector inject_absolute(const Vector& exact, double eps1, rng::Engine& engine) {
  if (!(eps1 >= 0.0)) throw InvalidArgument("inject_absolute: eps1 must be >= 0");
  return place_on_boundary(exact, eps1, engine);
}

Vector inject_relative(const Vector& exact, const Vector& center_x, double eps2,
                       rng::Engine& engine) {
  if (!(eps2 >= 0.0 && eps2 < 1.0)) throw InvalidArgument("inject_relative: eps2 must lie in [0, 1)");
  numerics::require_same_dim(exact.size(), center_x.size(), "inject_relative");
  return place_on_boundary(exact, eps2 * (center_x - exact).squaredNorm(), engine);
}

ProxResult evaluate(const InexactnessSpec& spec, const QuadraticClient& client, const Vector& x,
                    double gamma, rng::Engine& engine) {
  return evaluate_with_exact(spec, client, x, gamma, prox_exact(client, x, gamma), engine);
}

ProxResult evaluate_with_exact(const InexactnessSpec& spec, const QuadraticClient& client,
                               const Vector& x, double gamma, const Vector& exact_point,
                               rng::Engine& engine) {
  const Target& target = spec.target();
  ProxResult result;
  switch (spec.mode()) {
    case Mode::kExact:
      result.point = exact_point;
      result.exact_point = exact_point;
      return result;
    case Mode::kAbsoluteInjected:
    case Mode::kRelativeInjected: {
      const double dist0_sq = (x - exact_point).squaredNorm();
      result.exact_point = exact_point;
      result.point = spec.mode() == Mode::kAbsoluteInjected
                         ? inject_absolute(exact_point, target.eps, engine)
                         : inject_relative(exact_point, x, target.eps, engine);
      result.criterion_met =
          make_criterion(target, (result.point - exact_point).squaredNorm(), dist0_sq);
      break;
    }
    case Mode::kSolverGD:
      result = prox_gd(client, x, gamma, target, exact_point);
      break;
    case Mode::kSolverAGD:
      result = prox_agd(client, x, gamma, target, exact_point);
      break;
  }
  const double err_sq = (result.point - exact_point).squaredNorm();
  double bound = squared_bound(target, (x - exact_point).squaredNorm());
  if (spec.mode() == Mode::kSolverGD || spec.mode() == Mode::kSolverAGD) {
    bound = std::max(bound, resolution_floor(client, x, exact_point, gamma));
  }
  if (!(err_sq <= bound)) {
    throw Error("prox oracle output violates its inexactness criterion (" + spec.describe() + ")");
  }
  return result;
}

std::size_t local_complexity_gd(double smoothness, double gamma, Target target, double dist0_sq) {
  if (!(gamma > 0.0) || !(smoothness >= 0.0)) {
    throw InvalidArgument("local_complexity_gd: need gamma > 0 and L >= 0");
  }
  if (dist0_sq <= 0.0) return 0;
  const double rho = 1.0 - 1.0 / (1.0 + gamma * smoothness);
  const double dist = target.kind == Target::Kind::kAbsolute ? dist0_sq : 1.0;
  return smallest_decay_steps(1.0, rho, dist, target.eps);
}

std::size_t local_complexity_agd(double smoothness, double gamma, Target target, double dist0_sq) {
  if (!(gamma > 0.0) || !(smoothness >= 0.0)) {
    throw InvalidArgument("local_complexity_agd: need gamma > 0 and L >= 0");
  }
  if (dist0_sq <= 0.0) return 0;
  const double condition = 1.0 + gamma * smoothness;
  const double rho = 1.0 - 1.0 / std::sqrt(condition);
  const double dist = target.kind == Target::Kind::kAbsolute ? dist0_sq : 1.0;
  return smallest_decay_steps(2.0 * condition, rho, dist, target.eps);
}

double dist0_upper_bound(const QuadraticClient& client, const Vector& x, double gamma) {
  return (gamma * client.gradient(x)).squaredNorm();
}

}  // namespace fedexprox::prox
