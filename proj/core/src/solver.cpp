#include "sloewner/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sloewner/errors.hpp"

namespace sloewner {

namespace {

std::string point_str(Complex s) {
  return "(" + std::to_string(s.real()) + ", " + std::to_string(s.imag()) +
         "i)";
}

Vector basis_values(const AffineStructure& structure, int k, const Vector& pts) {
  Vector v(pts.size());
  for (Index i = 0; i < pts.size(); ++i) v(i) = structure[k](pts(i));
  return v;
}

Vector basis_derivs(const AffineStructure& structure, int k, const Vector& pts) {
  Vector v(pts.size());
  for (Index i = 0; i < pts.size(); ++i) v(i) = structure[k].derivative(pts(i));
  return v;
}

// sum_k coeff[k] * X_k = rhs (left) or sum_k X_k * coeff[k] = rhs (right).
struct MatrixEquation {
  bool left = true;
  std::vector<Matrix> coeff;
  Matrix rhs;
};

AssembledSystem assemble_system(const std::vector<MatrixEquation>& eqs,
                                Index n, int K) {
  AssembledSystem sys;
  sys.n = n;
  sys.K = K;
  const Index nn = n * n;
  sys.A = Matrix::Zero(Index(eqs.size()) * nn, Index(K) * nn);
  sys.beta = Vector::Zero(Index(eqs.size()) * nn);

  for (std::size_t e = 0; e < eqs.size(); ++e) {
    const Index row0 = Index(e) * nn;
    for (int k = 0; k < K; ++k) {
      const Index col0 = Index(k) * nn;
      const Matrix& Cf = eqs[e].coeff[k];
      if (eqs[e].left) {
        // I_n (x) Cf
        for (Index c = 0; c < n; ++c)
          sys.A.block(row0 + c * n, col0 + c * n, n, n) = Cf;
      } else {
        // Cf^T (x) I_n
        for (Index r = 0; r < n; ++r)
          for (Index c = 0; c < n; ++c) {
            Complex v = Cf(c, r);
            if (v == 0.0) continue;
            for (Index d = 0; d < n; ++d)
              sys.A(row0 + r * n + d, col0 + c * n + d) = v;
          }
      }
    }
    sys.beta.segment(row0, nn) =
        Eigen::Map<const Vector>(eqs[e].rhs.data(), nn);
  }
  return sys;
}

void solve_system(AssembledSystem& sys, const SolveOptions& opts) {
  Eigen::PartialPivLU<Matrix> lu(sys.A);
  double rc = lu.rcond();
  if (std::isfinite(rc) && rc >= opts.singular_rcond) {
    sys.solution = lu.solve(sys.beta);
  } else {
    Eigen::BDCSVD<Matrix> svd(sys.A,
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    sys.smallest_sv = svd.singularValues()(svd.singularValues().size() - 1);
    sys.solution = svd.solve(sys.beta);
    sys.least_squares = true;
  }
  sys.residual =
      (sys.A * sys.solution - sys.beta).norm() / (1.0 + sys.beta.norm());
}

std::vector<Matrix> realify_or_throw(std::vector<Matrix> mats, Matrix& B,
                                     Matrix& C) {
  double scale = 0.0, imag = 0.0;
  auto scan = [&](const Matrix& M) {
    if (M.size() == 0) return;
    scale = std::max(scale, M.cwiseAbs().maxCoeff());
    imag = std::max(imag, M.imag().cwiseAbs().maxCoeff());
  };
  for (const auto& M : mats) scan(M);
  scan(B);
  scan(C);
  if (imag > 1e-10 * (1.0 + scale))
    throw NumericError(
        "real construction left significant imaginary parts; the data is "
        "not effectively closed under conjugation");
  for (auto& M : mats) M = M.real().cast<Complex>().eval();
  B = B.real().cast<Complex>().eval();
  C = C.real().cast<Complex>().eval();
  return mats;
}

Index shared_left_pairs(const GroupedData& groups) {
  Index pairs = sorted_pair_count(groups.left_groups[0]);
  for (Index q = 1; q < groups.qf(); ++q)
    if (sorted_pair_count(groups.left_groups[q]) != pairs)
      throw ClosureError(
          "left groups have different conjugate-pair patterns; the SISO "
          "real construction needs matching patterns");
  return pairs;
}

Index shared_right_pairs(const GroupedData& groups) {
  Index pairs = sorted_pair_count(groups.right_groups[0]);
  for (Index q = 1; q < groups.qg(); ++q)
    if (sorted_pair_count(groups.right_groups[q]) != pairs)
      throw ClosureError(
          "right groups have different conjugate-pair patterns; the SISO "
          "real construction needs matching patterns");
  return pairs;
}

// Orthonormal columns spanning the orthogonal complement of span(X) (X has
// full column rank cols <= rows).
Matrix column_complement(const Matrix& X) {
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(X.rows() - X.cols());
}

RealMatrix column_complement(const RealMatrix& X) {
  Eigen::JacobiSVD<RealMatrix> svd(X, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(X.rows() - X.cols());
}

void require_full_row_rank(const Matrix& block, const std::string& name) {
  if (block.rows() > block.cols())
    throw RankError(name + " has more rows than columns; cannot complete");
  Eigen::JacobiSVD<Matrix> svd(block);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0))
    throw RankError(name + " is row rank deficient; cannot complete");
}

}  // namespace

std::vector<Matrix> AssembledSystem::unpack() const {
  std::vector<Matrix> mats;
  for (int k = 0; k < K; ++k)
    mats.push_back(
        Eigen::Map<const Matrix>(solution.data() + Index(k) * n * n, n, n));
  return mats;
}

PMatrixSet choose_p_siso(const GroupedData& groups) {
  if (groups.m != 1 || groups.p != 1)
    throw DataError("diagonal P construction requires a SISO system");
  const Index n = groups.group_size;
  PMatrixSet pset;
  pset.diagonal = true;
  for (Index q = 0; q < groups.qf(); ++q) {
    Matrix Fq = groups.Fq(q);  // 1 x n
    for (Index i = 0; i < n; ++i)
      if (Fq(0, i) == 0.0)
        throw ZeroSampleError("zero sample at left point " +
                              point_str(groups.left_groups[q][i].mu));
    pset.PF.push_back(Fq.row(0).asDiagonal());
  }
  for (Index q = 0; q < groups.qg(); ++q) {
    Matrix Gq = groups.Gq(q);
    for (Index i = 0; i < n; ++i)
      if (Gq(0, i) == 0.0)
        throw ZeroSampleError("zero sample at right point " +
                              point_str(groups.right_groups[q][i].sigma));
    pset.PG.push_back(Gq.row(0).asDiagonal());
  }
  pset.B = Matrix::Ones(n, 1);
  pset.C = Matrix::Ones(1, n);
  return pset;
}

PMatrixSet choose_p_mimo(const GroupedData& groups, bool make_real) {
  const Index n = groups.group_size;
  const Index m = groups.m, p = groups.p;
  PMatrixSet pset;
  pset.real_completion = make_real;

  for (Index q = 0; q < groups.qf(); ++q) {
    Matrix Ft = groups.Fq(q).transpose();  // n x m
    require_full_row_rank(groups.Fq(q), "left data block F_" +
                                            std::to_string(q + 1));
    Matrix completion;
    if (make_real) {
      Index pairs = sorted_pair_count(groups.left_groups[q]);
      Matrix T = pair_block_transform(n, pairs);
      RealMatrix E = (T.adjoint() * Ft).real();
      completion = T * column_complement(E).cast<Complex>();
      pset.TF.push_back(T);
    } else {
      completion = column_complement(Ft);
    }
    Matrix PFt(n, n);
    PFt << Ft, completion;  // P_{F,q}^T
    pset.PF.push_back(PFt.transpose());
  }

  for (Index q = 0; q < groups.qg(); ++q) {
    Matrix Gq = groups.Gq(q);  // p x n
    require_full_row_rank(Gq, "right data block G_" + std::to_string(q + 1));
    Matrix completion_rows;
    if (make_real) {
      Index pairs = sorted_pair_count(groups.right_groups[q]);
      Matrix T = pair_block_transform(n, pairs);
      RealMatrix E = (Gq * T).real();  // p x n
      RealMatrix Y = column_complement(RealMatrix(E.transpose())).transpose();
      completion_rows = Y.cast<Complex>() * T.adjoint();
      pset.TG.push_back(T);
    } else {
      completion_rows = column_complement(Matrix(Gq.adjoint())).adjoint();
    }
    Matrix PG(n, n);
    PG << Gq, completion_rows;
    pset.PG.push_back(PG);
  }

  pset.B = Matrix::Zero(n, m);
  pset.B.topRows(m) = Matrix::Identity(m, m);
  pset.C = Matrix::Zero(p, n);
  pset.C.leftCols(p) = Matrix::Identity(p, p);
  return pset;
}

PMatrixSet choose_p_siso_hermite(const InterpolationData& data,
                                 HermiteSide side) {
  if (data.m != 1 || data.p != 1)
    throw DataError("diagonal P construction requires a SISO system");
  const Index n = data.n_left();
  if (n != data.n_right())
    throw SizeMismatchError("Hermite path needs equally long sides");

  PMatrixSet pset;
  pset.diagonal = true;
  Matrix F = data.F(), G = data.G();
  for (Index i = 0; i < n; ++i) {
    if (F(0, i) == 0.0)
      throw ZeroSampleError("zero sample at left point " +
                            point_str(data.left[i].mu));
    if (G(0, i) == 0.0)
      throw ZeroSampleError("zero sample at right point " +
                            point_str(data.right[i].sigma));
  }
  pset.PF.push_back(F.row(0).asDiagonal());
  pset.PG.push_back(G.row(0).asDiagonal());
  if (side != HermiteSide::Right) {
    if (!data.has_left_derivatives())
      throw MissingHermiteDataError("left Hermite data (f') missing");
    pset.PFp = data.Fp().row(0).asDiagonal();
  }
  if (side != HermiteSide::Left) {
    if (!data.has_right_derivatives())
      throw MissingHermiteDataError("right Hermite data (g') missing");
    pset.PGp = data.Gp().row(0).asDiagonal();
  }
  pset.B = Matrix::Ones(n, 1);
  pset.C = Matrix::Ones(1, n);
  return pset;
}

PMatrixSet choose_p_mimo_hermite(const InterpolationData& data,
                                 HermiteSide side, bool make_real) {
  const Index n = data.n_left();
  if (n != data.n_right())
    throw SizeMismatchError("Hermite path needs equally long sides");
  const Index m = data.m, p = data.p;

  PMatrixSet pset;
  pset.real_completion = make_real;
  Matrix TF = Matrix::Identity(n, n), TG = TF;
  if (make_real) {
    TF = pair_block_transform(n, sorted_pair_count(data.left));
    TG = pair_block_transform(n, sorted_pair_count(data.right));
    pset.TF.push_back(TF);
    pset.TG.push_back(TG);
  }

  auto complete_left = [&](const Matrix& cols, const std::string& name) {
    require_full_row_rank(Matrix(cols.transpose()), name);
    Matrix completion = make_real
                            ? Matrix(TF * column_complement(RealMatrix(
                                              (TF.adjoint() * cols).real()))
                                              .cast<Complex>())
                            : column_complement(cols);
    Matrix Pt(n, n);
    Pt << cols, completion;
    return Matrix(Pt.transpose());
  };
  auto complete_right = [&](const Matrix& rows, const std::string& name) {
    require_full_row_rank(rows, name);
    Matrix completion_rows;
    if (make_real) {
      RealMatrix E = (rows * TG).real();
      RealMatrix Y = column_complement(RealMatrix(E.transpose())).transpose();
      completion_rows = Y.cast<Complex>() * TG.adjoint();
    } else {
      completion_rows = column_complement(Matrix(rows.adjoint())).adjoint();
    }
    Matrix P(n, n);
    P << rows, completion_rows;
    return P;
  };

  pset.PF.push_back(complete_left(data.F().transpose(), "left data block F"));
  pset.PG.push_back(complete_right(data.G(), "right data block G"));
  if (side != HermiteSide::Right) {
    if (!data.has_left_derivatives())
      throw MissingHermiteDataError("left Hermite data (f') missing");
    pset.PFp = complete_left(data.Fp().transpose(), "left data block F'");
  }
  if (side != HermiteSide::Left) {
    if (!data.has_right_derivatives())
      throw MissingHermiteDataError("right Hermite data (g') missing");
    pset.PGp = complete_right(data.Gp(), "right data block G'");
  }

  pset.B = Matrix::Zero(n, m);
  pset.B.topRows(m) = Matrix::Identity(m, m);
  pset.C = Matrix::Zero(p, n);
  pset.C.leftCols(p) = Matrix::Identity(p, p);
  return pset;
}

namespace {

StructuredRealization haar_solve(const GroupedData& groups,
                                 const AffineStructure& structure,
                                 const PMatrixSet& pset,
                                 const SolveOptions& opts) {
  const Index n = groups.group_size;
  const int K = structure.size();
  const Index qf = groups.qf(), qg = groups.qg();

  // Per-point basis rows scaled by the sample value.
  std::vector<std::vector<Eigen::RowVectorXcd>> left_rows(qf), right_rows(qg);
  for (Index q = 0; q < qf; ++q)
    for (Index i = 0; i < n; ++i) {
      Complex mu = groups.left_groups[q][i].mu;
      Complex f = groups.left_groups[q][i].f(0);
      Eigen::RowVectorXcd row(K);
      for (int k = 0; k < K; ++k) row(k) = f * structure[k](mu);
      left_rows[q].push_back(std::move(row));
    }
  for (Index q = 0; q < qg; ++q)
    for (Index j = 0; j < n; ++j) {
      Complex sigma = groups.right_groups[q][j].sigma;
      Complex g = groups.right_groups[q][j].g(0);
      Eigen::RowVectorXcd row(K);
      for (int k = 0; k < K; ++k) row(k) = g * structure[k](sigma);
      right_rows[q].push_back(std::move(row));
    }

  std::vector<Matrix> A(K, Matrix(n, n));
  Matrix sys(K, K);
  Vector rhs = Vector::Ones(K);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (Index q = 0; q < qf; ++q) sys.row(q) = left_rows[q][i];
      for (Index q = 0; q < qg; ++q) sys.row(qf + q) = right_rows[q][j];
      Eigen::FullPivLU<Matrix> lu(sys);
      if (!lu.isInvertible())
        throw HaarViolationError("Haar system singular", i, j);
      Vector x = lu.solve(rhs);
      for (int k = 0; k < K; ++k) A[k](i, j) = x(k);
    }
  }

  Matrix B = pset.B, C = pset.C;
  bool is_real = false;
  if (opts.make_real) {
    Matrix TF = pair_block_transform(n, shared_left_pairs(groups));
    Matrix TG = pair_block_transform(n, shared_right_pairs(groups));
    for (auto& Ak : A) Ak = (TF.adjoint() * Ak * TG).eval();
    B = TF.adjoint() * B;
    C = C * TG;
    A = realify_or_throw(std::move(A), B, C);
    is_real = true;
  }
  return StructuredRealization(structure, std::move(A), B, C, is_real);
}

StructuredRealization kronecker_solve(const GroupedData& groups,
                                      const AffineStructure& structure,
                                      const PMatrixSet& pset,
                                      const SolveOptions& opts) {
  const Index n = groups.group_size;
  const int K = structure.size();
  std::vector<MatrixEquation> eqs;
  Matrix B = pset.B, C = pset.C;
  bool is_real = false;

  if (!opts.make_real) {
    for (Index q = 0; q < groups.qf(); ++q) {
      MatrixEquation eq;
      eq.left = true;
      Vector mu = groups.mu_values(q);
      Matrix PFt = pset.PF[q].transpose();
      for (int k = 0; k < K; ++k)
        eq.coeff.push_back(basis_values(structure, k, mu).asDiagonal() * PFt);
      eq.rhs = groups.Lq(q).transpose() * pset.C;
      eqs.push_back(std::move(eq));
    }
    for (Index q = 0; q < groups.qg(); ++q) {
      MatrixEquation eq;
      eq.left = false;
      Vector sigma = groups.sigma_values(q);
      for (int k = 0; k < K; ++k)
        eq.coeff.push_back(
            pset.PG[q] * Matrix(basis_values(structure, k, sigma).asDiagonal()));
      eq.rhs = pset.B * groups.Rq(q);
      eqs.push_back(std::move(eq));
    }
  } else if (pset.diagonal) {
    // One shared transform per side; the unknowns become TF^* A_k TG.
    Matrix TF = pair_block_transform(n, shared_left_pairs(groups));
    Matrix TG = pair_block_transform(n, shared_right_pairs(groups));
    Matrix CT = pset.C * TG;
    Matrix TB = TF.adjoint() * pset.B;
    for (Index q = 0; q < groups.qf(); ++q) {
      MatrixEquation eq;
      eq.left = true;
      Vector mu = groups.mu_values(q);
      Matrix TP = TF.adjoint() * pset.PF[q].transpose() * TF;
      for (int k = 0; k < K; ++k) {
        Matrix TH =
            TF.adjoint() * basis_values(structure, k, mu).asDiagonal() * TF;
        eq.coeff.push_back(TH * TP);
      }
      eq.rhs = (TF.adjoint() * groups.Lq(q).transpose()) * CT;
      eqs.push_back(std::move(eq));
    }
    for (Index q = 0; q < groups.qg(); ++q) {
      MatrixEquation eq;
      eq.left = false;
      Vector sigma = groups.sigma_values(q);
      Matrix TP = TG.adjoint() * pset.PG[q] * TG;
      for (int k = 0; k < K; ++k) {
        Matrix TH =
            TG.adjoint() * basis_values(structure, k, sigma).asDiagonal() * TG;
        eq.coeff.push_back(TP * TH);
      }
      eq.rhs = TB * (groups.Rq(q) * TG);
      eqs.push_back(std::move(eq));
    }
    B = TB;
    C = CT;
    is_real = true;
  } else {
    // Completion-style P's already satisfy T^* P^T real; the A_k come out
    // real without a state transform.
    if (!pset.real_completion)
      throw DataError(
          "real solve requested but the P matrices were not built for real "
          "output");
    for (Index q = 0; q < groups.qf(); ++q) {
      MatrixEquation eq;
      eq.left = true;
      Vector mu = groups.mu_values(q);
      const Matrix& T = pset.TF[q];
      Matrix TP = T.adjoint() * pset.PF[q].transpose();
      for (int k = 0; k < K; ++k) {
        Matrix TH = T.adjoint() * basis_values(structure, k, mu).asDiagonal() * T;
        eq.coeff.push_back(TH * TP);
      }
      eq.rhs = (T.adjoint() * groups.Lq(q).transpose()) * pset.C;
      eqs.push_back(std::move(eq));
    }
    for (Index q = 0; q < groups.qg(); ++q) {
      MatrixEquation eq;
      eq.left = false;
      Vector sigma = groups.sigma_values(q);
      const Matrix& T = pset.TG[q];
      Matrix PT = pset.PG[q] * T;
      for (int k = 0; k < K; ++k) {
        Matrix TH =
            T.adjoint() * basis_values(structure, k, sigma).asDiagonal() * T;
        eq.coeff.push_back(PT * TH);
      }
      eq.rhs = pset.B * (groups.Rq(q) * T);
      eqs.push_back(std::move(eq));
    }
    is_real = true;
  }

  AssembledSystem sys = assemble_system(eqs, n, K);
  solve_system(sys, opts);
  std::vector<Matrix> A = sys.unpack();
  if (is_real) A = realify_or_throw(std::move(A), B, C);

  StructuredRealization r(structure, std::move(A), B, C, is_real);
  ResidualReport rep = interpolation_residuals(r, groups);
  if (rep.worst() > opts.verify_tol)
    throw SingularSystemError(
        "interpolation verification failed (worst residual " +
        std::to_string(rep.worst()) +
        (sys.least_squares ? ", least-squares fallback was used" : "") + ")",
        sys.smallest_sv, sys.residual);
  return r;
}

}  // namespace

StructuredRealization solve_additional_points(const GroupedData& groups,
                                              const AffineStructure& structure,
                                              const PMatrixSet& pset,
                                              const SolveOptions& opts) {
  const int K = structure.size();
  if (groups.qf() + groups.qg() != K)
    throw SizeMismatchError("need Q_F + Q_G = K, got " +
                            std::to_string(groups.qf()) + " + " +
                            std::to_string(groups.qg()) + " != " +
                            std::to_string(K));
  if (Index(pset.PF.size()) != groups.qf() ||
      Index(pset.PG.size()) != groups.qg())
    throw SizeMismatchError("P matrix set does not match the grouping");

  const bool haar = pset.diagonal && groups.m == 1 && groups.p == 1 &&
                    opts.path != SolveOptions::Path::Kronecker;
  StructuredRealization r = haar
                                ? haar_solve(groups, structure, pset, opts)
                                : kronecker_solve(groups, structure, pset, opts);
  if (haar) {
    // The Haar fast path skips the assembled-system verification; check here.
    ResidualReport rep = interpolation_residuals(r, groups);
    if (rep.worst() > opts.verify_tol)
      throw SingularSystemError(
          "interpolation verification failed (worst residual " +
          std::to_string(rep.worst()) + ")",
          -1.0, rep.worst());
  }
  return r;
}

StructuredRealization solve_hermite(const InterpolationData& data,
                                    const AffineStructure& structure,
                                    const PMatrixSet& pset, HermiteSide side,
                                    const SolveOptions& opts) {
  const int K = structure.size();
  const int expected = side == HermiteSide::Both ? 4 : 3;
  if (K != expected)
    throw DataError("Hermite interpolation with " +
                    std::string(side == HermiteSide::Both ? "both sides"
                                                          : "one side") +
                    " requires K = " + std::to_string(expected) + ", got K = " +
                    std::to_string(K));
  const Index n = data.n_left();
  if (n != data.n_right())
    throw SizeMismatchError("Hermite path needs equally long sides");
  for (const auto& ls : data.left)
    for (const auto& rs : data.right)
      if (ls.mu == rs.sigma)
        throw DuplicatePointError(
            "Hermite path requires disjoint left and right point sets; both "
            "contain " +
            point_str(ls.mu));
  if (side != HermiteSide::Right && !data.has_left_derivatives())
    throw MissingHermiteDataError("left Hermite data (f') missing");
  if (side != HermiteSide::Left && !data.has_right_derivatives())
    throw MissingHermiteDataError("right Hermite data (g') missing");
  if (side != HermiteSide::Right && pset.PFp.size() == 0)
    throw MissingHermiteDataError("P set lacks the left derivative matrix");
  if (side != HermiteSide::Left && pset.PGp.size() == 0)
    throw MissingHermiteDataError("P set lacks the right derivative matrix");

  Vector mu = data.mu_values(), sigma = data.sigma_values();
  Matrix B = pset.B, C = pset.C;
  bool is_real = false;
  std::vector<MatrixEquation> eqs;

  Matrix TF = Matrix::Identity(n, n), TG = TF;
  bool sandwich = false;
  if (opts.make_real) {
    if (pset.diagonal) {
      TF = pair_block_transform(n, sorted_pair_count(data.left));
      TG = pair_block_transform(n, sorted_pair_count(data.right));
      sandwich = true;
      B = TF.adjoint() * B;
      C = C * TG;
    } else if (!pset.real_completion) {
      throw DataError(
          "real solve requested but the P matrices were not built for real "
          "output");
    } else {
      TF = pset.TF.at(0);
      TG = pset.TG.at(0);
    }
    is_real = true;
  }

  auto diag_left = [&](const Matrix& M) -> Matrix {
    return opts.make_real ? Matrix(TF.adjoint() * M * TF) : M;
  };
  auto diag_right = [&](const Matrix& M) -> Matrix {
    return opts.make_real ? Matrix(TG.adjoint() * M * TG) : M;
  };

  // P factors as used in the block rows.
  Matrix PFt = pset.PF[0].transpose();
  Matrix PFpt = pset.PFp.size() ? Matrix(pset.PFp.transpose()) : Matrix();
  Matrix PG = pset.PG[0];
  Matrix PGp = pset.PGp;
  if (opts.make_real) {
    if (sandwich) {
      PFt = TF.adjoint() * PFt * TF;
      if (PFpt.size()) PFpt = TF.adjoint() * PFpt * TF;
      PG = TG.adjoint() * PG * TG;
      if (PGp.size()) PGp = TG.adjoint() * PGp * TG;
    } else {
      PFt = TF.adjoint() * PFt;
      if (PFpt.size()) PFpt = TF.adjoint() * PFpt;
      PG = PG * TG;
      if (PGp.size()) PGp = PGp * TG;
    }
  }

  {  // left values
    MatrixEquation eq;
    eq.left = true;
    for (int k = 0; k < K; ++k)
      eq.coeff.push_back(diag_left(basis_values(structure, k, mu).asDiagonal()) *
                         PFt);
    Matrix Lt = data.L().transpose();
    if (opts.make_real) Lt = TF.adjoint() * Lt;
    eq.rhs = Lt * C;
    eqs.push_back(std::move(eq));
  }
  if (side != HermiteSide::Right) {  // left derivatives
    MatrixEquation eq;
    eq.left = true;
    for (int k = 0; k < K; ++k) {
      Matrix h = diag_left(basis_values(structure, k, mu).asDiagonal());
      Matrix hp = diag_left(basis_derivs(structure, k, mu).asDiagonal());
      eq.coeff.push_back(h * PFpt + hp * PFt);
    }
    eq.rhs = Matrix::Zero(n, n);
    eqs.push_back(std::move(eq));
  }
  {  // right values
    MatrixEquation eq;
    eq.left = false;
    for (int k = 0; k < K; ++k)
      eq.coeff.push_back(
          PG * diag_right(basis_values(structure, k, sigma).asDiagonal()));
    Matrix R = data.R();
    if (opts.make_real) R = R * TG;
    eq.rhs = B * R;
    eqs.push_back(std::move(eq));
  }
  if (side != HermiteSide::Left) {  // right derivatives
    MatrixEquation eq;
    eq.left = false;
    for (int k = 0; k < K; ++k) {
      Matrix h = diag_right(basis_values(structure, k, sigma).asDiagonal());
      Matrix hp = diag_right(basis_derivs(structure, k, sigma).asDiagonal());
      eq.coeff.push_back(PGp * h + PG * hp);
    }
    eq.rhs = Matrix::Zero(n, n);
    eqs.push_back(std::move(eq));
  }

  AssembledSystem sys = assemble_system(eqs, n, K);
  solve_system(sys, opts);
  std::vector<Matrix> A = sys.unpack();
  if (is_real) A = realify_or_throw(std::move(A), B, C);

  StructuredRealization r(structure, std::move(A), B, C, is_real);
  ResidualReport rep = interpolation_residuals(r, data);
  double worst = std::max({rep.left, rep.right,
                           side != HermiteSide::Right ? rep.left_deriv : 0.0,
                           side != HermiteSide::Left ? rep.right_deriv : 0.0});
  if (worst > opts.verify_tol)
    throw SingularSystemError(
        "Hermite interpolation verification failed (worst residual " +
        std::to_string(worst) +
        (sys.least_squares ? ", least-squares fallback was used" : "") + ")",
        sys.smallest_sv, sys.residual);
  return r;
}

namespace {

Index rank_of(const Eigen::VectorXd& sv, double tol) {
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * sv(0)) ++r;
  return r;
}

}  // namespace

StructuredRealization rank_truncate(const StructuredRealization& r, double tol,
                                    std::span<const Complex> probe_points,
                                    const InterpolationData* verify,
                                    unsigned seed) {
  const Index n = r.order();
  const int K = r.structure().size();

  Matrix W1, V1;
  Index rh, rv;
  if (r.is_real()) {
    RealMatrix H(n, Index(K) * n), V(Index(K) * n, n);
    for (int k = 0; k < K; ++k) {
      H.middleCols(Index(k) * n, n) = r.A(k).real();
      V.middleRows(Index(k) * n, n) = r.A(k).real();
    }
    Eigen::BDCSVD<RealMatrix> hsvd(H, Eigen::ComputeThinU);
    Eigen::BDCSVD<RealMatrix> vsvd(V, Eigen::ComputeThinV);
    rh = rank_of(hsvd.singularValues(), tol);
    rv = rank_of(vsvd.singularValues(), tol);
    if (rh != rv)
      throw RankMismatchError("horizontal stack rank " + std::to_string(rh) +
                              " differs from vertical stack rank " +
                              std::to_string(rv));
    W1 = hsvd.matrixU().leftCols(rh).cast<Complex>();
    V1 = vsvd.matrixV().leftCols(rh).cast<Complex>();
  } else {
    Matrix H(n, Index(K) * n), V(Index(K) * n, n);
    for (int k = 0; k < K; ++k) {
      H.middleCols(Index(k) * n, n) = r.A(k);
      V.middleRows(Index(k) * n, n) = r.A(k);
    }
    Eigen::BDCSVD<Matrix> hsvd(H, Eigen::ComputeThinU);
    Eigen::BDCSVD<Matrix> vsvd(V, Eigen::ComputeThinV);
    rh = rank_of(hsvd.singularValues(), tol);
    rv = rank_of(vsvd.singularValues(), tol);
    if (rh != rv)
      throw RankMismatchError("horizontal stack rank " + std::to_string(rh) +
                              " differs from vertical stack rank " +
                              std::to_string(rv));
    W1 = hsvd.matrixU().leftCols(rh);
    V1 = vsvd.matrixV().leftCols(rh);
  }
  if (rh == 0)
    throw RankMismatchError("all coefficient matrices are numerically zero");

  // rank(K(s)) must equal the common rank at the driving frequencies and a
  // few random probe points.
  std::vector<Complex> probes(probe_points.begin(), probe_points.end());
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ (seed + 1));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    double radius = 0.5 + 1.5 * unif(rng);
    double angle = 2.0 * M_PI * unif(rng);
    probes.push_back(radius * Complex(std::cos(angle), std::sin(angle)));
  }
  for (Complex s : probes) {
    Matrix Ks = r.kernel(s);
    Eigen::BDCSVD<Matrix> ksvd(Ks);
    Index rk = rank_of(ksvd.singularValues(), tol);
    if (rk != rh)
      throw RankMismatchError("kernel rank " + std::to_string(rk) + " at " +
                              point_str(s) +
                              " differs from coefficient rank " +
                              std::to_string(rh));
  }

  if (rh == n) return r;

  std::vector<Matrix> Ar;
  for (int k = 0; k < K; ++k)
    Ar.push_back(W1.adjoint() * r.A(k) * V1);
  Matrix Br = W1.adjoint() * r.B();
  Matrix Cr = r.C() * V1;
  if (r.is_real()) {
    Ar = realify_or_throw(std::move(Ar), Br, Cr);
  }
  StructuredRealization out(r.structure(), std::move(Ar), Br, Cr, r.is_real());

  if (verify) {
    ResidualReport rep = interpolation_residuals(out, *verify);
    if (rep.worst() > 1e-6)
      throw RankMismatchError(
          "truncation broke interpolation (worst residual " +
          std::to_string(rep.worst()) + ")");
  }
  return out;
}

namespace {

template <class Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (Error& e) {
    e.set_stage(stage);
    throw;
  }
}

InterpolationData flatten(const GroupedData& groups) {
  InterpolationData d;
  d.m = groups.m;
  d.p = groups.p;
  for (const auto& g : groups.left_groups)
    d.left.insert(d.left.end(), g.begin(), g.end());
  for (const auto& g : groups.right_groups)
    d.right.insert(d.right.end(), g.begin(), g.end());
  return d;
}

Index horizontal_rank(const StructuredRealization& r, double tol) {
  const Index n = r.order();
  const int K = r.structure().size();
  Matrix H(n, Index(K) * n);
  for (int k = 0; k < K; ++k) H.middleCols(Index(k) * n, n) = r.A(k);
  Eigen::BDCSVD<Matrix> svd(H);
  return rank_of(svd.singularValues(), tol);
}

StructuredRealization finish_additional(StructuredRealization r,
                                        const GroupedData& grouped,
                                        const RealizeOptions& opts) {
  if (!opts.truncate) return r;
  if (horizontal_rank(r, opts.truncation_tol) >= r.order()) return r;
  InterpolationData all = flatten(grouped);
  std::vector<Complex> pts = grouped.all_points();
  return staged("truncation", [&] {
    return rank_truncate(r, opts.truncation_tol, pts, &all, opts.seed);
  });
}

}  // namespace

StructuredRealization realize(const GroupedData& grouped,
                              const AffineStructure& structure,
                              const RealizeOptions& opts) {
  using Method = RealizeOptions::Method;
  if (opts.method != Method::Auto && opts.method != Method::Additional)
    throw DataError("explicitly grouped data only supports the "
                    "additional-points method");
  staged("data", [&] { grouped.validate(); return 0; });

  PMatrixSet pset = staged("p-matrices", [&] {
    return grouped.m == 1 && grouped.p == 1
               ? choose_p_siso(grouped)
               : choose_p_mimo(grouped, opts.make_real);
  });
  SolveOptions sopts;
  sopts.make_real = opts.make_real;
  StructuredRealization r = staged("additional", [&] {
    return solve_additional_points(grouped, structure, pset, sopts);
  });
  return finish_additional(std::move(r), grouped, opts);
}

StructuredRealization realize(const InterpolationData& pool,
                              const AffineStructure& structure,
                              const RealizeOptions& opts) {
  using Method = RealizeOptions::Method;
  staged("data", [&] { pool.validate(); return 0; });
  const int K = structure.size();

  Method method = opts.method;
  HermiteSide side = opts.hermite_side;
  if (method == Method::Auto) {
    if (K == 2) {
      method = Method::K2;
    } else if (K == 4 && pool.has_left_derivatives() &&
               pool.has_right_derivatives()) {
      method = Method::Hermite;
      side = HermiteSide::Both;
    } else if (K == 3 && (pool.has_left_derivatives() ||
                          pool.has_right_derivatives())) {
      method = Method::Hermite;
      if (!pool.has_left_derivatives()) side = HermiteSide::Right;
      if (!pool.has_right_derivatives()) side = HermiteSide::Left;
    } else {
      method = Method::Additional;
    }
  }

  switch (method) {
    case Method::K2: {
      if (K != 2)
        throw DataError("method k2 requires a K = 2 structure, got K = " +
                        std::to_string(K));
      return staged("k2", [&] {
        return k2_realization(pool, structure, opts.make_real);
      });
    }
    case Method::Hermite: {
      if (K == 4) side = HermiteSide::Both;
      InterpolationData data = pool;
      if (opts.make_real) {
        ClosureResult cr = staged("closure", [&] {
          return conjugate_closure_sort(pool);
        });
        if (!cr.closed)
          throw NotClosedError(
              "real realization requested but data is not closed under "
              "conjugation");
        data = std::move(cr.data);
      }
      PMatrixSet pset = staged("p-matrices", [&] {
        return data.m == 1 && data.p == 1
                   ? choose_p_siso_hermite(data, side)
                   : choose_p_mimo_hermite(data, side, opts.make_real);
      });
      SolveOptions sopts;
      sopts.make_real = opts.make_real;
      StructuredRealization r = staged("hermite", [&] {
        return solve_hermite(data, structure, pset, side, sopts);
      });
      if (opts.truncate &&
          horizontal_rank(r, opts.truncation_tol) < r.order()) {
        std::vector<Complex> pts;
        for (const auto& s : data.left) pts.push_back(s.mu);
        for (const auto& s : data.right) pts.push_back(s.sigma);
        r = staged("truncation", [&] {
          return rank_truncate(r, opts.truncation_tol, pts, &data, opts.seed);
        });
      }
      return r;
    }
    case Method::Additional: {
      int qf = opts.qf;
      int qg = opts.qg < 0 ? K - qf : opts.qg;
      if (qf + qg != K)
        throw SizeMismatchError("need Q_F + Q_G = K, got " +
                                std::to_string(qf) + " + " +
                                std::to_string(qg) + " != " +
                                std::to_string(K));
      GroupedData grouped = staged("partition", [&] {
        return partition_groups(pool, qf, qg, opts.make_real);
      });
      RealizeOptions sub = opts;
      sub.method = Method::Additional;
      return realize(grouped, structure, sub);
    }
    default:
      throw DataError("unsupported realization method");
  }
}

double ResidualReport::worst() const {
  return std::max({left, right, bitangential, left_deriv, right_deriv});
}

ResidualReport interpolation_residuals(const StructuredRealization& r,
                                       const InterpolationData& data) {
  ResidualReport rep;
  for (Index i = 0; i < data.n_left(); ++i) {
    const auto& s = data.left[i];
    Matrix H = r.transfer(s.mu);
    double res = (H.transpose() * s.ell - s.f).norm() / (1.0 + s.f.norm());
    rep.left = std::max(rep.left, res);
    if (data.has_left_derivatives()) {
      Matrix Hp = r.transfer_derivative(s.mu);
      double dres = (Hp.transpose() * s.ell - data.f_prime[i]).norm() /
                    (1.0 + data.f_prime[i].norm());
      rep.left_deriv = std::max(rep.left_deriv, dres);
    }
  }
  for (Index i = 0; i < data.n_right(); ++i) {
    const auto& s = data.right[i];
    Matrix H = r.transfer(s.sigma);
    double res = (H * s.r - s.g).norm() / (1.0 + s.g.norm());
    rep.right = std::max(rep.right, res);
    if (data.has_right_derivatives()) {
      Matrix Hp = r.transfer_derivative(s.sigma);
      double dres = (Hp * s.r - data.g_prime[i]).norm() /
                    (1.0 + data.g_prime[i].norm());
      rep.right_deriv = std::max(rep.right_deriv, dres);
    }
  }
  for (const auto& e : data.bitangential) {
    Matrix Hp = r.transfer_derivative(data.left[e.index].mu);
    Complex val =
        (data.left[e.index].ell.transpose() * Hp * data.right[e.index].r)(0);
    double res = std::abs(val - e.theta) / (1.0 + std::abs(e.theta));
    rep.bitangential = std::max(rep.bitangential, res);
  }
  return rep;
}

ResidualReport interpolation_residuals(const StructuredRealization& r,
                                       const GroupedData& groups) {
  InterpolationData flat = flatten(groups);
  return interpolation_residuals(r, flat);
}

}  // namespace sloewner
