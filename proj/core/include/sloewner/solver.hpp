#pragma once

#include <span>
#include <vector>

#include "sloewner/data.hpp"
#include "sloewner/loewner.hpp"
#include "sloewner/structure.hpp"
#include "sloewner/types.hpp"

namespace sloewner {

// Fixed P matrices of the staggered construction: F_q^T = P_{F,q}^T B and
// G_q = C P_{G,q} hold by construction; the remaining matrix equations are
// then solved for the A_k.
struct PMatrixSet {
  std::vector<Matrix> PF;  // one n x n matrix per left group
  std::vector<Matrix> PG;  // one n x n matrix per right group
  Matrix PFp, PGp;         // Hermite derivative P's; empty when unused
  Matrix B;                // n x m
  Matrix C;                // p x n
  bool diagonal = false;         // SISO diag(F_q) / diag(G_q) construction
  bool real_completion = false;  // MIMO completion compatible with T
  std::vector<Matrix> TF, TG;    // per-group transforms (real_completion)
};

// SISO choice P_{F,q} = diag(F_q), P_{G,q} = diag(G_q), B = C^T = ones.
// A zero sample would make the diagonal singular (ZeroSampleError).
PMatrixSet choose_p_siso(const GroupedData& groups);

// MIMO choice P_{F,q}^T = [F_q^T *], P_{G,q} = [G_q; *], B = [I_m; 0],
// C = [I_p 0], with * an orthonormal basis of the orthogonal complement of
// the data block (RankError when the data block is row-deficient). With
// make_real, the completion is chosen so that the per-group transforms map
// the P's to real matrices; each group must be closure-sorted.
PMatrixSet choose_p_mimo(const GroupedData& groups, bool make_real = false);

enum class HermiteSide { Left, Right, Both };

PMatrixSet choose_p_siso_hermite(const InterpolationData& data,
                                 HermiteSide side);
PMatrixSet choose_p_mimo_hermite(const InterpolationData& data,
                                 HermiteSide side, bool make_real = false);

struct SolveOptions {
  enum class Path { Auto, Kronecker, Haar };
  Path path = Path::Auto;
  bool make_real = false;
  // LU reciprocal-condition floor below which the assembled system is
  // treated as numerically singular and solved by least squares instead.
  double singular_rcond = 1e-12;
  // Post-hoc interpolation check; worse than this raises
  // SingularSystemError.
  double verify_tol = 1e-6;
};

// Kronecker system A alpha = beta of the additional-points construction.
struct AssembledSystem {
  Matrix A;
  Vector beta;
  Index n = 0;
  int K = 0;
  Vector solution;
  double residual = 0.0;      // ||A x - beta|| / (1 + ||beta||)
  double smallest_sv = -1.0;  // set when the least-squares fallback ran
  bool least_squares = false;

  std::vector<Matrix> unpack() const;  // K coefficient matrices, n x n
};

// Solves for A_1..A_K matching the grouped data (Q_F + Q_G = K). SISO with
// diagonal P's dispatches to the per-entry K x K Haar systems; the dense
// Kronecker system is kept as the reference route.
StructuredRealization solve_additional_points(const GroupedData& groups,
                                              const AffineStructure& structure,
                                              const PMatrixSet& pset,
                                              const SolveOptions& opts = {});

// Hermite solver: K = 4 matches values and derivatives on both sides,
// K = 3 on the chosen side only. Point sets must be disjoint.
StructuredRealization solve_hermite(const InterpolationData& data,
                                    const AffineStructure& structure,
                                    const PMatrixSet& pset, HermiteSide side,
                                    const SolveOptions& opts = {});

// Removes redundant states: requires the common rank r of the horizontal
// stack [A_1 ... A_K], the vertical stack, and the kernel K(s) at all probe
// points; then projects onto the orthogonal complements of the shared null
// spaces. RankMismatchError when the ranks disagree. With `verify`, value
// (and Hermite) interpolation is re-checked on the truncated realization.
StructuredRealization rank_truncate(const StructuredRealization& r,
                                    double tol = kRankTruncationTol,
                                    std::span<const Complex> probe_points = {},
                                    const InterpolationData* verify = nullptr,
                                    unsigned seed = 0);

struct RealizeOptions {
  enum class Method { Auto, K2, Additional, Hermite };
  Method method = Method::Auto;
  bool make_real = false;
  int qf = 1;
  int qg = -1;  // -1: K - qf
  double truncation_tol = kRankTruncationTol;
  HermiteSide hermite_side = HermiteSide::Left;  // for K = 3
  bool truncate = true;
  unsigned seed = 0;
};

// Orchestrates the whole construction: optional conjugate-closure handling,
// the K = 2 transformed-data pencil, otherwise the Hermite path when
// derivative data is available or the additional-points path after
// partitioning, followed by rank truncation when redundancy is detected.
// Errors are tagged with the pipeline stage they came from.
StructuredRealization realize(const InterpolationData& pool,
                              const AffineStructure& structure,
                              const RealizeOptions& opts = {});

// Same pipeline for explicitly grouped data (bypasses partitioning).
StructuredRealization realize(const GroupedData& grouped,
                              const AffineStructure& structure,
                              const RealizeOptions& opts = {});

// Worst-case relative interpolation residuals of a realization against
// data, using ||.|| / (1 + ||reference||).
struct ResidualReport {
  double left = 0.0;
  double right = 0.0;
  double bitangential = 0.0;
  double left_deriv = 0.0;
  double right_deriv = 0.0;
  double worst() const;
};

ResidualReport interpolation_residuals(const StructuredRealization& r,
                                       const InterpolationData& data);
ResidualReport interpolation_residuals(const StructuredRealization& r,
                                       const GroupedData& groups);

}  // namespace sloewner
