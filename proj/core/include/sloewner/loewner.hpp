#pragma once

#include <string>
#include <vector>

#include "sloewner/data.hpp"
#include "sloewner/structure.hpp"
#include "sloewner/types.hpp"

namespace sloewner {

// Loewner matrix pair built entrywise from tangential data:
//   [L]_ij  = (f_i^T r_j - ell_i^T g_j) / (mu_i - sigma_j)
//   [Ls]_ij = (mu_i f_i^T r_j - sigma_j ell_i^T g_j) / (mu_i - sigma_j)
// with [L]_ii = theta_i and [Ls]_ii = f_i^T r_i + mu_i theta_i at
// coinciding points.
struct LoewnerPencil {
  Matrix L;   // n x n
  Matrix Ls;  // n x n, shifted
  Matrix F;   // F^T of the data, n x m
  Matrix G;   // G of the data, p x n
  std::vector<std::string> warnings;  // near-coincidence notes
};

// Requires equally long sides and a bitangential datum at every coinciding
// index (MissingThetaError otherwise). Near-coincidences within
// 1e-8 * max(1, |mu|) are recorded as conditioning warnings.
LoewnerPencil build_loewner_pencil(const InterpolationData& data);

// Classical realization with structure (s, -1):
// A_1 = -L, A_2 = -Ls, B = F^T, C = G, so H(s) = G (Ls - s L)^{-1} F^T.
// When the pencil is singular at a driving frequency, the redundant part is
// truncated by a short SVD; DegenerateDataError if that cannot restore
// regularity.
StructuredRealization loewner_realization(const InterpolationData& data,
                                          double svd_tol = kPencilSvdTol);

// Data transform that reduces a K=2 structure to the classical pencil:
// points h_1/h_2, directions divided by h_2, transformed bitangential data.
// Hermite vectors (unused by this path) are dropped.
InterpolationData transform_data_k2(const InterpolationData& data,
                                    const AffineStructure& structure);

// K=2 realization: A_1 = -L, A_2 = +Ls from the transformed-data pencil,
// so K(s) = h_2(s) Ls - h_1(s) L. The result is cross-checked against the
// direct entrywise formulas. With make_real, conjugate-closed data yields a
// real realization via the pair transforms.
StructuredRealization k2_realization(const InterpolationData& data,
                                     const AffineStructure& structure,
                                     bool make_real = false,
                                     double svd_tol = kPencilSvdTol);

}  // namespace sloewner
