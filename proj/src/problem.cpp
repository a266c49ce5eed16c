#include "fedexprox/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "fedexprox/errors.hpp"
#include "fedexprox/rng.hpp"

namespace fedexprox {
namespace {

Eigen::MatrixXd haar_orthogonal(Index d, rng::Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) g(i, j) = normal(engine);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Vector draw_diagonal(Index d, Index rank, const Spectrum& spectrum, rng::Engine& engine) {
  std::uniform_real_distribution<double> uniform(spectrum.lambda_lo, spectrum.lambda_hi);
  Vector diag = Vector::Zero(d);
  for (Index j = 0; j < rank; ++j) {
    diag[j] = spectrum.lambda_hi > spectrum.lambda_lo ? uniform(engine) : spectrum.lambda_lo;
  }
  return diag;
}

QuadraticClient make_client(const Eigen::MatrixXd& q, const Vector& diag, const Vector& x_star) {
  const Eigen::MatrixXd a = q * diag.asDiagonal() * q.transpose();
  SymMatrix sym = SymMatrix::from_upper(a);
  Vector b = -(sym * x_star);
  const double c = -0.5 * x_star.dot(b);
  numerics::EigenRange known{diag.minCoeff(), diag.maxCoeff()};
  return QuadraticClient(std::move(sym), std::move(b), c, known);
}

}  // namespace

QuadraticClient::QuadraticClient(SymMatrix a, Vector b, double c)
    : a_(std::move(a)), b_(std::move(b)), c_(c), cache_(std::make_shared<numerics::FactorCache>()) {
  numerics::require_same_dim(a_.dim(), b_.size(), "QuadraticClient linear term");
  const numerics::EigenRange range = numerics::extreme_eigenvalues(a_, kSpectralTolerance);
  if (!numerics::is_psd(a_, range)) {
    throw NotPositiveDefinite("QuadraticClient: A is not PSD (lambda_min=" +
                              std::to_string(range.lambda_min) + ")");
  }
  smoothness_ = std::max(range.lambda_max, 0.0);
}

QuadraticClient::QuadraticClient(SymMatrix a, Vector b, double c, numerics::EigenRange known)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(c),
      smoothness_(known.lambda_max),
      cache_(std::make_shared<numerics::FactorCache>()) {
  numerics::require_same_dim(a_.dim(), b_.size(), "QuadraticClient linear term");
  if (known.lambda_min < 0.0) throw NotPositiveDefinite("QuadraticClient: negative spectrum");
}

double QuadraticClient::value(const Vector& x) const {
  numerics::require_same_dim(dim(), x.size(), "QuadraticClient::value");
  return 0.5 * a_.quadratic_form(x) + b_.dot(x) + c_;
}

Vector QuadraticClient::gradient(const Vector& x) const {
  numerics::require_same_dim(dim(), x.size(), "QuadraticClient::gradient");
  return a_ * x + b_;
}

std::shared_ptr<const numerics::ShiftedCholesky> QuadraticClient::prox_factor(double gamma) const {
  if (!(gamma > 0.0)) throw InvalidArgument("prox step gamma must be > 0");
  return cache_->get(a_, 1.0 / gamma);
}

FederatedProblem::FederatedProblem(std::vector<QuadraticClient> clients, Vector x_star,
                                   std::uint64_t seed, Spectrum spectrum)
    : clients_(std::move(clients)), x_star_(std::move(x_star)), seed_(seed), spectrum_(spectrum) {
  if (clients_.empty()) throw InvalidArgument("FederatedProblem needs at least one client");
  for (const auto& c : clients_) {
    numerics::require_same_dim(x_star_.size(), c.dim(), "FederatedProblem client");
    l_max_ = std::max(l_max_, c.smoothness());
  }
  const double residual = interpolation_residual();
  if (!(residual <= 1e-10)) {
    throw InvalidArgument("FederatedProblem: clients do not share the minimizer (residual " +
                          std::to_string(residual) + ")");
  }
  const numerics::EigenRange range =
      numerics::extreme_eigenvalues(average_hessian(), kSpectralTolerance);
  mu_ = range.lambda_min;
  if (!(mu_ > 1e-10 * range.lambda_max) || !(mu_ > 0.0)) {
    throw DegenerateSpectrum("FederatedProblem: average Hessian is not positive definite (mu=" +
                             std::to_string(mu_) + ")");
  }
  mu_ = std::min(mu_, l_max_);
}

const QuadraticClient& FederatedProblem::client(std::size_t i) const {
  if (i >= clients_.size()) {
    throw InvalidArgument("client index " + std::to_string(i) + " out of range (n=" +
                          std::to_string(clients_.size()) + ")");
  }
  return clients_[i];
}

SymMatrix FederatedProblem::average_hessian() const {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim(), dim());
  for (const auto& c : clients_) sum += c.A().dense();
  sum /= static_cast<double>(clients_.size());
  return SymMatrix::from_upper(sum);
}

double FederatedProblem::interpolation_residual() const {
  double worst = 0.0;
  for (const auto& c : clients_) {
    worst = std::max(worst, c.gradient(x_star_).norm() / (1.0 + c.b().norm()));
  }
  return worst;
}

FederatedProblem generate_interpolated(std::size_t n, Index d, std::uint64_t seed,
                                       const Spectrum& spectrum) {
  if (n < 1 || d < 1) throw InvalidArgument("generate_interpolated: need n >= 1 and d >= 1");
  if (!(spectrum.lambda_lo >= 0.0) || !(spectrum.lambda_hi >= spectrum.lambda_lo)) {
    throw InvalidArgument("generate_interpolated: need lambda_hi >= lambda_lo >= 0");
  }
  if (!(spectrum.rank_fraction > 0.0 && spectrum.rank_fraction <= 1.0)) {
    throw InvalidArgument("generate_interpolated: rank_fraction must lie in (0, 1]");
  }
  const auto rank = std::clamp<Index>(
      static_cast<Index>(std::ceil(spectrum.rank_fraction * static_cast<double>(d) - 1e-9)), 1, d);

  rng::Engine minimizer_stream = rng::substream(seed, rng::Domain::kMinimizer);
  const Vector x_star = rng::standard_normal(d, minimizer_stream);

  std::vector<Eigen::MatrixXd> bases;
  std::vector<QuadraticClient> clients;
  bases.reserve(n);
  clients.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    rng::Engine stream = rng::substream(seed, rng::Domain::kClient, i);
    bases.push_back(haar_orthogonal(d, stream));
    const Vector diag = draw_diagonal(d, rank, spectrum, stream);
    clients.push_back(make_client(bases.back(), diag, x_star));
  }
  try {
    return FederatedProblem(clients, x_star, seed, spectrum);
  } catch (const DegenerateSpectrum&) {
    // Full-rank fallback for client 0.
    rng::Engine stream = rng::substream(seed, rng::Domain::kClient, 0, 1);
    const Vector diag = draw_diagonal(d, d, spectrum, stream);
    clients[0] = make_client(bases[0], diag, x_star);
    return FederatedProblem(std::move(clients), x_star, seed, spectrum);
  }
}

Vector grad_client(const FederatedProblem& p, std::size_t i, const Vector& x) {
  return p.client(i).gradient(x);
}

double value_client(const FederatedProblem& p, std::size_t i, const Vector& x) {
  return p.client(i).value(x);
}

double value_global(const FederatedProblem& p, const Vector& x) {
  double sum = 0.0;
  for (const auto& c : p.clients()) sum += c.value(x);
  return sum / static_cast<double>(p.n_clients());
}

SymMatrix envelope_hessian(const FederatedProblem& p, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("envelope_hessian: gamma must be > 0");
  const Index d = p.dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (const auto& c : p.clients()) {
    // A (I + gamma A)^{-1} = (A + I/gamma)^{-1} A / gamma; the factors commute.
    const Eigen::MatrixXd h = c.prox_factor(gamma)->solve(c.A().dense()) / gamma;
    sum += 0.5 * (h + h.transpose());
  }
  sum /= static_cast<double>(p.n_clients());
  return SymMatrix::from_upper(sum);
}

MoreauSmoothness moreau_smoothness(const FederatedProblem& p, double gamma) {
  const SymMatrix h = envelope_hessian(p, gamma);
  MoreauSmoothness out;
  out.L_gamma = numerics::extreme_eigenvalues(h, kSpectralTolerance).lambda_max;
  double sum = 0.0;
  for (const auto& c : p.clients()) sum += c.smoothness() / (1.0 + gamma * c.smoothness());
  const auto n = static_cast<double>(p.n_clients());
  out.lower_bound = sum / (n * n);
  out.upper_bound = sum / n;
  return out;
}

}  // namespace fedexprox
