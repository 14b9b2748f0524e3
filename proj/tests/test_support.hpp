#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sloewner/data.hpp"
#include "sloewner/oracle.hpp"
#include "sloewner/structure.hpp"
#include "sloewner/types.hpp"

namespace sloewner::test {

inline double rel_diff(Complex a, Complex b) {
  return std::abs(a - b) / (1.0 + std::abs(b));
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

inline std::vector<double> logspace(double a, double b, int count) {
  std::vector<double> v(count);
  double la = std::log10(a), lb = std::log10(b);
  for (int i = 0; i < count; ++i)
    v[i] = std::pow(10.0, la + (lb - la) * (count == 1 ? 0.0 : double(i) / (count - 1)));
  return v;
}

// Random dense real model with diagonally shifted coefficients so the kernel
// stays comfortably invertible on the sampling annulus.
inline FullModel random_model(const AffineStructure& structure, Index N,
                              Index m, Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Matrix> A;
  for (int k = 0; k < structure.size(); ++k) {
    RealMatrix R(N, N);
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < N; ++j) R(i, j) = gauss(rng);
    R /= std::sqrt(double(N));
    R += (2.0 + 0.5 * k) * RealMatrix::Identity(N, N);
    A.push_back(R.cast<Complex>());
  }
  RealMatrix Br(N, m), Cr(p, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < m; ++j) Br(i, j) = gauss(rng);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < N; ++j) Cr(i, j) = gauss(rng);
  return FullModel(structure, std::move(A), Br.cast<Complex>(),
                   Cr.cast<Complex>(), true);
}

// Distinct points on an annulus, away from the origin (reciprocal-safe).
inline std::vector<Complex> random_points(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Complex> pts;
  while (int(pts.size()) < count) {
    double radius = 0.5 + 1.5 * unif(rng);
    double angle = 2.0 * M_PI * unif(rng);
    Complex z = radius * Complex(std::cos(angle), std::sin(angle));
    bool dup = false;
    for (Complex w : pts)
      if (std::abs(w - z) < 1e-6) dup = true;
    if (!dup) pts.push_back(z);
  }
  return pts;
}

inline Vector random_direction(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = gauss(rng);
  return v / v.norm();
}

// Kernel conditioning at the points; instances failing this are re-drawn.
inline bool well_conditioned(const FullModel& model,
                             const std::vector<Complex>& pts,
                             double floor = 1e-8) {
  for (Complex s : pts) {
    Eigen::PartialPivLU<Matrix> lu(model.kernel(s));
    double rc = lu.rcond();
    if (!std::isfinite(rc) || rc < floor) return false;
  }
  return true;
}

}  // namespace sloewner::test
