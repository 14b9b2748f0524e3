#include "sloewner/loewner.hpp"

#include <cmath>

#include "sloewner/errors.hpp"
#include "sloewner/solver.hpp"

namespace sloewner {

namespace {

std::string point_str(Complex s) {
  return "(" + std::to_string(s.real()) + ", " + std::to_string(s.imag()) +
         "i)";
}

Complex bilinear(const Vector& a, const Vector& b) {
  return (a.transpose() * b)(0);
}

double kernel_rcond(const StructuredRealization& r, Complex s) {
  Eigen::PartialPivLU<Matrix> lu(r.kernel(s));
  return lu.rcond();
}

bool regular_at(const StructuredRealization& r,
                const std::vector<Complex>& points) {
  for (Complex s : points) {
    double rc = kernel_rcond(r, s);
    if (!std::isfinite(rc) || rc < kSingularRcond) return false;
  }
  return true;
}

std::vector<Complex> driving_points(const InterpolationData& data) {
  std::vector<Complex> pts;
  for (const auto& s : data.left) pts.push_back(s.mu);
  for (const auto& s : data.right) pts.push_back(s.sigma);
  return pts;
}

}  // namespace

LoewnerPencil build_loewner_pencil(const InterpolationData& data) {
  const Index n = data.n_left();
  if (n != data.n_right())
    throw SizeMismatchError("pencil needs equally many left and right samples");

  LoewnerPencil pencil;
  pencil.L.resize(n, n);
  pencil.Ls.resize(n, n);

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      Complex mu = data.left[i].mu;
      Complex sigma = data.right[j].sigma;
      if (mu == sigma) {
        if (i != j)
          throw DuplicatePointError(
              "coinciding point " + point_str(mu) +
              " must sit at the same index on both sides");
        auto theta = data.theta_at(i);
        if (!theta)
          throw MissingThetaError(
              "no bitangential derivative datum at coinciding point " +
              point_str(mu));
        pencil.L(i, i) = *theta;
        pencil.Ls(i, i) =
            bilinear(data.left[i].f, data.right[i].r) + mu * *theta;
        continue;
      }
      Complex d = mu - sigma;
      if (std::abs(d) <= 1e-8 * std::max(1.0, std::abs(mu)))
        pencil.warnings.push_back("nearly coinciding points " +
                                  point_str(mu) + " and " + point_str(sigma) +
                                  "; divided differences are ill-conditioned");
      Complex fr = bilinear(data.left[i].f, data.right[j].r);
      Complex lg = bilinear(data.left[i].ell, data.right[j].g);
      pencil.L(i, j) = (fr - lg) / d;
      pencil.Ls(i, j) = (mu * fr - sigma * lg) / d;
    }
  }

  pencil.F = data.F().transpose();
  pencil.G = data.G();
  return pencil;
}

StructuredRealization loewner_realization(const InterpolationData& data,
                                          double svd_tol) {
  LoewnerPencil pencil = build_loewner_pencil(data);
  AffineStructure structure({monomial(1), monomial(0, -1.0)});
  StructuredRealization r(structure, {-pencil.L, -pencil.Ls}, pencil.F,
                          pencil.G);

  std::vector<Complex> pts = driving_points(data);
  if (regular_at(r, pts)) return r;

  try {
    r = rank_truncate(r, svd_tol, pts);
  } catch (const RankMismatchError& e) {
    throw DegenerateDataError(
        std::string("pencil singular at a driving frequency and not "
                    "truncatable: ") +
        e.what());
  }
  if (!regular_at(r, pts))
    throw DegenerateDataError(
        "pencil remains singular at a driving frequency after truncation");
  return r;
}

InterpolationData transform_data_k2(const InterpolationData& data,
                                    const AffineStructure& structure) {
  if (structure.size() != 2)
    throw DataError("data transform requires a K = 2 structure, got K = " +
                    std::to_string(structure.size()));
  const BasisFunction& h1 = structure[0];
  const BasisFunction& h2 = structure[1];

  std::vector<Complex> singular;
  for (const auto& s : data.left)
    if (h2(s.mu) == 0.0) singular.push_back(s.mu);
  for (const auto& s : data.right)
    if (h2(s.sigma) == 0.0) singular.push_back(s.sigma);
  if (!singular.empty()) {
    std::string msg = "h_2 vanishes at sampled point(s):";
    for (Complex s : singular) msg += " " + point_str(s);
    throw TransformSingularError(msg);
  }

  InterpolationData out;
  out.m = data.m;
  out.p = data.p;
  for (const auto& s : data.left) {
    Complex h2v = h2(s.mu);
    out.left.push_back({h1(s.mu) / h2v, s.ell / h2v, s.f});
  }
  for (const auto& s : data.right) {
    Complex h2v = h2(s.sigma);
    out.right.push_back({h1(s.sigma) / h2v, s.r / h2v, s.g});
  }

  for (const auto& e : data.bitangential) {
    Complex mu = data.left[e.index].mu;
    Complex denom = h1.derivative(mu) * h2(mu) - h2.derivative(mu) * h1(mu);
    if (denom == 0.0)
      throw DenominatorError("h_1' h_2 - h_2' h_1 vanishes at coinciding point " +
                             point_str(mu));
    Complex lg = bilinear(data.left[e.index].ell, data.right[e.index].g);
    Complex theta_hat = (h2(mu) * e.theta + h2.derivative(mu) * lg) / denom;
    out.bitangential.push_back({e.index, theta_hat});
  }

  // The generic assumption h_2(mu) h_1(sigma) != h_1(mu) h_2(sigma) fails
  // exactly when two transformed points collide across sides.
  for (Index i = 0; i < out.n_left(); ++i)
    for (Index j = 0; j < out.n_right(); ++j)
      if (i != j && out.left[i].mu == out.right[j].sigma)
        throw DenominatorError(
            "transformed points collide: h_1/h_2 maps " +
            point_str(data.left[i].mu) + " and " +
            point_str(data.right[j].sigma) + " to the same value " +
            point_str(out.left[i].mu));

  return out;
}

StructuredRealization k2_realization(const InterpolationData& data,
                                     const AffineStructure& structure,
                                     bool make_real, double svd_tol) {
  if (structure.size() != 2)
    throw DataError("k2 realization requires K = 2, got K = " +
                    std::to_string(structure.size()));
  if (data.n_left() != data.n_right())
    throw SizeMismatchError("k2 realization needs equally long sides");
  const Index n = data.n_left();

  InterpolationData used = data;
  bool realify = false;
  if (make_real) {
    ClosureResult cr = conjugate_closure_sort(data);
    if (!cr.closed)
      throw NotClosedError(
          "real realization requested but data is not closed under "
          "conjugation");
    used = std::move(cr.data);
    realify = true;
  }

  InterpolationData transformed = transform_data_k2(used, structure);
  LoewnerPencil pencil = build_loewner_pencil(transformed);
  Matrix A1 = -pencil.L;
  Matrix A2 = pencil.Ls;

  // Cross-check against the direct entrywise construction on the original
  // data; the two routes are algebraically identical.
  const BasisFunction& h1 = structure[0];
  const BasisFunction& h2 = structure[1];
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      Complex mu = used.left[i].mu, sigma = used.right[j].sigma;
      Complex a1d, a2d;
      if (mu == sigma) {
        Complex theta = *used.theta_at(i);
        Complex lg = bilinear(used.left[i].ell, used.right[i].g);
        Complex dd = h2.derivative(mu) * h1(mu) - h1.derivative(mu) * h2(mu);
        a1d = (h2(mu) * theta + h2.derivative(mu) * lg) / dd;
        a2d = (h1(mu) * theta + h1.derivative(mu) * lg) / -dd;
      } else {
        Complex fr = bilinear(used.left[i].f, used.right[j].r);
        Complex lg = bilinear(used.left[i].ell, used.right[j].g);
        Complex dd = h2(mu) * h1(sigma) - h1(mu) * h2(sigma);
        a1d = (h2(mu) * fr - lg * h2(sigma)) / dd;
        a2d = (h1(mu) * fr - lg * h1(sigma)) / -dd;
      }
      if (std::abs(A1(i, j) - a1d) > 1e-12 * (1.0 + std::abs(a1d)) ||
          std::abs(A2(i, j) - a2d) > 1e-12 * (1.0 + std::abs(a2d)))
        throw NumericError(
            "transformed-data pencil disagrees with the direct entrywise "
            "formulas at entry (" +
            std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }

  Matrix B = pencil.F;
  Matrix C = pencil.G;
  bool is_real = false;

  if (realify) {
    RealTransform t = real_transform(used);
    A1 = (t.TF.adjoint() * A1 * t.TG).eval();
    A2 = (t.TF.adjoint() * A2 * t.TG).eval();
    B = (t.TF.adjoint() * B).eval();
    C = (C * t.TG).eval();
    double scale = 0.0, imag = 0.0;
    for (const Matrix* M : {&A1, &A2, &B, &C}) {
      scale = std::max(scale, M->cwiseAbs().maxCoeff());
      imag = std::max(imag, M->imag().cwiseAbs().maxCoeff());
    }
    if (imag > 1e-10 * (1.0 + scale))
      throw NumericError(
          "real transform left significant imaginary parts; data closure is "
          "defective");
    A1 = A1.real().cast<Complex>();
    A2 = A2.real().cast<Complex>();
    B = B.real().cast<Complex>();
    C = C.real().cast<Complex>();
    is_real = true;
  }

  StructuredRealization r(structure, {A1, A2}, B, C, is_real);
  std::vector<Complex> pts = driving_points(used);
  if (regular_at(r, pts)) return r;

  try {
    r = rank_truncate(r, svd_tol, pts);
  } catch (const RankMismatchError& e) {
    throw RegularityError(std::string("kernel singular at a driving "
                                      "frequency and not truncatable: ") +
                          e.what());
  }
  if (!regular_at(r, pts))
    throw RegularityError(
        "kernel remains singular at a driving frequency after truncation");
  return r;
}

}  // namespace sloewner
