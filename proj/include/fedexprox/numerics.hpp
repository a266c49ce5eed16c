#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <unordered_map>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace fedexprox {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace numerics {

// Dense symmetric matrix. The upper triangle given at construction is
// authoritative and is mirrored into the lower one, so symmetry is exact.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Index dim);

  static SymMatrix from_upper(const Eigen::MatrixXd& m);
  static SymMatrix identity(Index dim);
  static SymMatrix diagonal(const Vector& diag);

  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  const Eigen::MatrixXd& dense() const { return m_; }

  // Throws DimensionMismatch.
  Vector operator*(const Vector& v) const;
  double quadratic_form(const Vector& v) const;

 private:
  Eigen::MatrixXd m_;
};

struct EigenRange {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

// lambda_max by power iteration, lambda_min by power iteration on
// (lambda_max I - M). Deterministic start vector. rel_tol in (0, 1e-3].
EigenRange extreme_eigenvalues(const SymMatrix& m, double rel_tol);

// Iteration cap used by extreme_eigenvalues: max(500, 10 d log(1/rel_tol)).
std::size_t power_iteration_cap(Index dim, double rel_tol);

// PSD within tol_psd = 1e-10 * lambda_max.
bool is_psd(const SymMatrix& m, const EigenRange& range);

// Cholesky factor of (M + shift I).
class ShiftedCholesky {
 public:
  ShiftedCholesky(const SymMatrix& m, double shift);

  Index dim() const { return dim_; }
  double shift() const { return shift_; }
  Vector solve(const Vector& v) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

 private:
  Index dim_;
  double shift_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Solves (M + shift I) z = v to relative residual 1e-12, refining if the
// first solve falls short.
Vector spd_solve(const SymMatrix& m, const Vector& v, double shift);

// Populate-once cache of shifted factors of a single matrix, keyed by the
// exact bit pattern of the shift. Concurrent reads, exclusive inserts.
class FactorCache {
 public:
  std::shared_ptr<const ShiftedCholesky> get(const SymMatrix& m, double shift) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::uint64_t, std::shared_ptr<const ShiftedCholesky>> factors_;
};

void require_same_dim(Index expected, Index actual, const char* what);
bool all_finite(const Vector& v);

}  // namespace numerics
}  // namespace fedexprox
