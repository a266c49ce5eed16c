#pragma once

#include <filesystem>

#include "fedexprox/problem.hpp"

namespace fedexprox {

// Binary problem dump, all fields little-endian:
//
//   bytes  0..7   magic "FXPROB01"
//   u64           n
//   u64           d
//   u64           seed
//   f64 x 3       lambda_lo, lambda_hi, rank_fraction
//   f64 x d       x_star
//   per client i = 0..n-1:
//     f64         c_i
//     f64 x d     b_i
//     f64 x d*d   A_i, row-major
//
// Spectral constants are recomputed on load.
void save_problem(const FederatedProblem& p, const std::filesystem::path& path);
FederatedProblem load_problem(const std::filesystem::path& path);

}  // namespace fedexprox
