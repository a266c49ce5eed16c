#include "fedexprox/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "fedexprox/errors.hpp"
#include "fedexprox/rng.hpp"

namespace fedexprox::numerics {
namespace {

constexpr std::uint64_t kPowerIterationSeed = 0x70f3e1a5c0ffee11ULL;

Vector start_vector(Index d) {
  rng::Engine engine(kPowerIterationSeed);
  Vector v = rng::standard_normal(d, engine);
  return v / v.norm();
}

// Extreme eigenvalues from the power-iteration Krylov space
// span{v, Mv, M^2 v, ...}, extracted by Rayleigh-Ritz (Lanczos with full
// reorthogonalization). The space is invariant under M -> lambda I - M, so
// the same iterates serve the shifted iteration for lambda_min. Stops when
// both extreme Ritz residuals drop below rel_tol * scale, or when the space
// becomes invariant.
EigenRange krylov_extremes(const Eigen::MatrixXd& m, double rel_tol, std::size_t cap) {
  const Index d = m.rows();
  const double floor_scale = m.norm() * std::numeric_limits<double>::epsilon();
  const Index max_steps = static_cast<Index>(std::min<std::size_t>(cap, static_cast<std::size_t>(d)));
  Eigen::MatrixXd basis(d, max_steps);
  std::vector<double> alpha;
  std::vector<double> beta;
  basis.col(0) = start_vector(d);
  EigenRange out;
  for (Index k = 0; k < max_steps; ++k) {
    Vector w = m.selfadjointView<Eigen::Upper>() * basis.col(k);
    alpha.push_back(basis.col(k).dot(w));
    // two passes of classical Gram-Schmidt against the whole basis
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    }
    const double b = w.norm();
    const Index size = k + 1;
    const bool last = size == max_steps;
    const bool check = last || size <= 8 || size % 4 == 0 || b <= floor_scale;
    if (check) {
      Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), size);
      Eigen::VectorXd sub = size > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), size - 1))
                                     : Eigen::VectorXd();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      out.lambda_min = tri.eigenvalues()(0);
      out.lambda_max = tri.eigenvalues()(size - 1);
      const double r_min = b * std::abs(tri.eigenvectors()(size - 1, 0));
      const double r_max = b * std::abs(tri.eigenvectors()(size - 1, size - 1));
      const double scale = std::max({std::abs(out.lambda_max), std::abs(out.lambda_min), floor_scale});
      const double tol = rel_tol * scale;
      if (b <= floor_scale || (r_min <= tol && r_max <= tol) || (last && size == d)) return out;
    }
    if (k + 1 < max_steps) {
      beta.push_back(b);
      basis.col(k + 1) = w / b;
    }
  }
  throw NoConvergence("power iteration did not converge within " + std::to_string(cap) +
                      " iterations (d=" + std::to_string(d) + ")");
}

}  // namespace

SymMatrix::SymMatrix(Index dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {}

SymMatrix SymMatrix::from_upper(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("SymMatrix requires a square matrix, got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
  }
  SymMatrix out;
  out.m_ = m.triangularView<Eigen::Upper>();
  out.m_.triangularView<Eigen::StrictlyLower>() = m.transpose().triangularView<Eigen::StrictlyLower>();
  return out;
}

SymMatrix SymMatrix::identity(Index dim) {
  SymMatrix out;
  out.m_ = Eigen::MatrixXd::Identity(dim, dim);
  return out;
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  SymMatrix out;
  out.m_ = diag.asDiagonal();
  return out;
}

Vector SymMatrix::operator*(const Vector& v) const {
  require_same_dim(dim(), v.size(), "matrix-vector product");
  return m_.selfadjointView<Eigen::Upper>() * v;
}

double SymMatrix::quadratic_form(const Vector& v) const { return v.dot(*this * v); }

std::size_t power_iteration_cap(Index dim, double rel_tol) {
  const double raw = 10.0 * static_cast<double>(dim) * std::log(1.0 / rel_tol);
  return std::max<std::size_t>(500, static_cast<std::size_t>(std::ceil(raw)));
}

EigenRange extreme_eigenvalues(const SymMatrix& m, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol <= 1e-3)) {
    throw InvalidArgument("extreme_eigenvalues: rel_tol must lie in (0, 1e-3]");
  }
  const Index d = m.dim();
  if (d == 0) throw DimensionMismatch("extreme_eigenvalues: empty matrix");
  return krylov_extremes(m.dense(), rel_tol, power_iteration_cap(d, rel_tol));
}

bool is_psd(const SymMatrix& m, const EigenRange& range) {
  (void)m;
  const double tol_psd = 1e-10 * std::abs(range.lambda_max);
  return range.lambda_min >= -tol_psd;
}

ShiftedCholesky::ShiftedCholesky(const SymMatrix& m, double shift)
    : dim_(m.dim()), shift_(shift) {
  if (!(shift >= 0.0)) throw InvalidArgument("ShiftedCholesky: shift must be >= 0");
  Eigen::MatrixXd shifted = m.dense();
  shifted.diagonal().array() += shift;
  llt_.compute(shifted);
  if (llt_.info() != Eigen::Success) {
    throw NotPositiveDefinite("Cholesky factorization hit a nonpositive pivot (shift=" +
                              std::to_string(shift) + ")");
  }
}

Vector ShiftedCholesky::solve(const Vector& v) const {
  require_same_dim(dim_, v.size(), "ShiftedCholesky::solve");
  return llt_.solve(v);
}

Eigen::MatrixXd ShiftedCholesky::solve(const Eigen::MatrixXd& rhs) const {
  require_same_dim(dim_, rhs.rows(), "ShiftedCholesky::solve");
  return llt_.solve(rhs);
}

Vector spd_solve(const SymMatrix& m, const Vector& v, double shift) {
  require_same_dim(m.dim(), v.size(), "spd_solve");
  const ShiftedCholesky factor(m, shift);
  Vector z = factor.solve(v);
  const double vnorm = v.norm();
  for (int refine = 0; refine < 3; ++refine) {
    const Vector residual = v - (m * z + shift * z);
    if (residual.norm() <= 1e-12 * vnorm) break;
    z += factor.solve(residual);
  }
  return z;
}

std::shared_ptr<const ShiftedCholesky> FactorCache::get(const SymMatrix& m, double shift) const {
  const auto key = std::bit_cast<std::uint64_t>(shift);
  {
    std::shared_lock lock(mutex_);
    if (auto it = factors_.find(key); it != factors_.end()) return it->second;
  }
  auto factor = std::make_shared<const ShiftedCholesky>(m, shift);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = factors_.emplace(key, std::move(factor));
  return it->second;
}

std::size_t FactorCache::size() const {
  std::shared_lock lock(mutex_);
  return factors_.size();
}

void require_same_dim(Index expected, Index actual, const char* what) {
  if (expected != actual) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(actual));
  }
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace fedexprox::numerics
