#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sloewner/oracle.hpp"
#include "sloewner/types.hpp"

namespace sloewner {

// Left sample: ell^T H(mu) = f^T  (ell is a p-vector, f an m-vector).
struct LeftSample {
  Complex mu;
  Vector ell;
  Vector f;
};

// Right sample: H(sigma) r = g  (r is an m-vector, g a p-vector).
struct RightSample {
  Complex sigma;
  Vector r;
  Vector g;
};

// Bitangential derivative datum theta_i = ell_i^T H'(mu_i) r_i for an index
// where mu_i == sigma_i exactly.
struct BitangentialEntry {
  Index index;
  Complex theta;
};

// Tangential interpolation data. Points within one side are distinct; a
// left/right coincidence is only admitted at equal indices and then carries
// a bitangential entry.
struct InterpolationData {
  int m = 1;  // inputs
  int p = 1;  // outputs
  std::vector<LeftSample> left;
  std::vector<RightSample> right;
  std::vector<BitangentialEntry> bitangential;
  std::vector<Vector> f_prime;  // empty, or one m-vector per left sample
  std::vector<Vector> g_prime;  // empty, or one p-vector per right sample

  Index n_left() const { return Index(left.size()); }
  Index n_right() const { return Index(right.size()); }
  bool has_left_derivatives() const { return !f_prime.empty(); }
  bool has_right_derivatives() const { return !g_prime.empty(); }
  std::optional<Complex> theta_at(Index i) const;

  Vector mu_values() const;
  Vector sigma_values() const;
  Matrix L() const;   // p x n, columns ell_i
  Matrix R() const;   // m x n, columns r_i
  Matrix F() const;   // m x n, columns f_i
  Matrix G() const;   // p x n, columns g_i
  Matrix Fp() const;  // m x n, columns f'_i
  Matrix Gp() const;  // p x n, columns g'_i

  // Checks dimensions, per-side distinctness and bitangential compatibility;
  // throws DataError subclasses.
  void validate() const;
};

struct SampleRequest {
  std::vector<Complex> left_points;
  std::vector<Complex> right_points;
  // Optional tangential directions. Empty means 1 for SISO and cycling
  // standard basis vectors for MIMO.
  std::vector<Vector> left_directions;
  std::vector<Vector> right_directions;
  bool want_hermite = false;
  bool want_bitangential = true;
};

// Evaluates the oracle along the requested directions:
// f_i^T = ell_i^T H(mu_i), g_i = H(sigma_i) r_i, and for coinciding points
// theta_i = ell_i^T H'(mu_i) r_i. Hermite vectors use the oracle derivative
// (analytic when provided, central differences otherwise).
InterpolationData tangential_sample(const TransferOracle& oracle,
                                    const SampleRequest& request);

struct CompatibilityFinding {
  std::string kind;  // "duplicate-point" | "compatibility"
  Index index;
  std::string message;
};

struct CompatibilityReport {
  std::vector<CompatibilityFinding> findings;
  bool ok() const { return findings.empty(); }
};

// Reports violations of f_i^T r_i = ell_i^T g_i at coinciding points and
// duplicate points within a side. Never throws.
CompatibilityReport check_compatibility(const InterpolationData& data);

struct ClosureResult {
  InterpolationData data;  // sorted on success, input copy otherwise
  bool closed = false;
  Index left_pairs = 0;
  Index right_pairs = 0;
};

// If each side is closed under complex conjugation (point, direction and
// value conjugated, tolerance 1e-12 relative), reorders both sides as
// conjugate pairs first, then real points. Bitangential and Hermite entries
// are permuted along and must pair up as well.
ClosureResult conjugate_closure_sort(const InterpolationData& data);

// Unitary transforms that map conjugate-sorted data to real form,
// blkdiag(1/sqrt(2) [[1, -i], [1, i]], ..., 1, ...) per side.
struct RealTransform {
  Matrix TF;  // n_left x n_left
  Matrix TG;  // n_right x n_right
};

// Requires data already sorted as produced by conjugate_closure_sort with
// closed == true; throws NotClosedError otherwise.
RealTransform real_transform(const InterpolationData& sorted_data);

Matrix pair_block_transform(Index n, Index pairs);

// Leading conjugate-pair count of an already closure-sorted sample run;
// throws NotClosedError when the layout is not pairs-then-reals.
Index sorted_pair_count(const std::vector<LeftSample>& samples);
Index sorted_pair_count(const std::vector<RightSample>& samples);

// Data partitioned into Q_F left and Q_G right groups of equal size n for
// the K >= 3 additional-points solver. Group 1 on each side is the base data.
struct GroupedData {
  int m = 1;
  int p = 1;
  Index group_size = 0;
  std::vector<std::vector<LeftSample>> left_groups;
  std::vector<std::vector<RightSample>> right_groups;

  Index qf() const { return Index(left_groups.size()); }
  Index qg() const { return Index(right_groups.size()); }

  Vector mu_values(Index q) const;
  Vector sigma_values(Index q) const;
  Matrix Lq(Index q) const;  // p x n
  Matrix Rq(Index q) const;  // m x n
  Matrix Fq(Index q) const;  // m x n
  Matrix Gq(Index q) const;  // p x n

  // Base data (first group on each side), without bitangential entries.
  InterpolationData base() const;
  std::vector<Complex> all_points() const;

  // Sizes, per-group distinctness, left/right disjointness.
  void validate() const;
};

// Splits a pool of Q_F*n left and Q_G*n right samples into groups of n,
// dealing round-robin from the frequency-sorted pool so every group spans
// the band. With per_group_closure, conjugate pairs are dealt as units and
// each group is individually closure-sorted (ClosureError when impossible).
GroupedData partition_groups(const InterpolationData& pool, int qf, int qg,
                             bool per_group_closure = false);

// Validates an explicitly constructed grouping (user-provided groups take
// precedence over the round-robin default).
GroupedData make_grouped(int m, int p,
                         std::vector<std::vector<LeftSample>> left_groups,
                         std::vector<std::vector<RightSample>> right_groups);

}  // namespace sloewner
