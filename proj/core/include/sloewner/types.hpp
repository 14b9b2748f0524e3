#pragma once

#include <Eigen/Dense>
#include <complex>

namespace sloewner {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Reciprocal condition estimate below which an LU solve of the kernel is
// treated as singular.
inline constexpr double kSingularRcond = 1e-14;

// Default relative cutoff for the short-SVD truncation of a singular
// Loewner pencil.
inline constexpr double kPencilSvdTol = 1e-12;

// Default relative cutoff for rank-based truncation of a redundant
// structured realization.
inline constexpr double kRankTruncationTol = 1e-10;

}  // namespace sloewner
