#include "sloewner/models.hpp"

#include <cmath>

#include "sloewner/errors.hpp"

namespace sloewner {

FullModel delay_toeplitz_model(int N, double nu, double zeta, double tau) {
  if (N < 2) throw DomainError("delay model needs N >= 2");
  if (zeta == 0.0) throw DomainError("delay model needs zeta != 0");
  if (tau <= 0.0) throw DomainError("delay model needs tau > 0");

  RealMatrix T = RealMatrix::Zero(N, N);
  for (int i = 0; i + 1 < N; ++i) {
    T(i, i + 1) = 1.0;
    T(i + 1, i) = 1.0;
  }
  T(0, 0) = 1.0;
  T(N - 1, N - 1) = 1.0;

  RealMatrix shifted = T - nu * RealMatrix::Identity(N, N);
  Matrix A1 = (nu * RealMatrix::Identity(N, N) + T).cast<Complex>();
  Matrix A2 = ((1.0 / tau) * (1.0 / zeta + 1.0) * shifted).cast<Complex>();
  Matrix A3 = ((1.0 / tau) * (1.0 / zeta - 1.0) * shifted).cast<Complex>();

  Matrix B = Matrix::Zero(N, 1);
  B(0, 0) = 1.0;
  B(1, 0) = 1.0;
  Matrix C = B.transpose();

  AffineStructure structure(
      {monomial(1), monomial(0, -1.0), exponential(tau, -1.0)});
  return FullModel(structure, {A1, A2, A3}, B, C, true);
}

DuctSystem acoustic_duct(double L, double xi0, double c, double rho0) {
  if (!(0.0 < xi0 && xi0 < L)) throw DomainError("duct needs 0 < xi0 < L");
  if (c <= 0.0) throw DomainError("duct needs c > 0");

  const double tau1 = xi0 / c;
  const double tau2 = (2.0 * L - xi0) / c;

  auto h = [=](Complex s) {
    return rho0 * std::sinh((L - xi0) * s / c) / std::cosh(L * s / c);
  };
  auto hp = [=](Complex s) {
    Complex num = std::sinh((L - xi0) * s / c);
    Complex den = std::cosh(L * s / c);
    Complex dnum = ((L - xi0) / c) * std::cosh((L - xi0) * s / c);
    Complex dden = (L / c) * std::sinh(L * s / c);
    return rho0 * (dnum * den - num * dden) / (den * den);
  };

  // Poles of H sit where cosh(Ls/c) = 0: s = i (2k+1) pi c / (2L).
  std::vector<Complex> poles;
  for (int k = -4; k <= 4; ++k)
    poles.push_back(Complex(0.0, (2 * k + 1) * M_PI * c / (2.0 * L)));

  Matrix A1 = Matrix::Identity(4, 4);
  A1(3, 1) = 1.0;
  Matrix A2 = Matrix::Zero(4, 4);
  A2(1, 2) = -1.0;
  A2(3, 0) = -1.0;
  Matrix A3 = Matrix::Zero(4, 4);
  A3(2, 3) = -1.0;
  A3(3, 0) = 1.0;
  Matrix B = Matrix::Zero(4, 1);
  B(0, 0) = 1.0;
  Matrix C = Matrix::Zero(1, 4);
  C(0, 3) = rho0;

  AffineStructure structure(
      {monomial(0), exponential(tau1), exponential(tau2)});
  FullModel exact(structure, {A1, A2, A3}, B, C, true);

  return DuctSystem{AnalyticOracle::scalar(h, hp, std::move(poles)),
                    std::move(exact)};
}

FullModel heated_rod_model(int N) {
  if (N < 3) throw DomainError("heated rod needs N >= 3");
  const double h = M_PI / (N + 1);

  RealMatrix Lap = RealMatrix::Zero(N, N);
  RealMatrix A1d = RealMatrix::Zero(N, N);
  RealMatrix A2d = RealMatrix::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    Lap(i, i) = -2.0 / (h * h);
    if (i > 0) Lap(i, i - 1) = 1.0 / (h * h);
    if (i + 1 < N) Lap(i, i + 1) = 1.0 / (h * h);
    double xi = (i + 1) * h;
    A1d(i, i) = -2.0 * std::sin(xi);
    A2d(i, i) = 2.0 * std::sin(xi);
  }

  Matrix A1 = Matrix::Identity(N, N);
  Matrix A2 = (Lap + A1d).cast<Complex>();
  Matrix A3 = A2d.cast<Complex>();
  Matrix B = Matrix::Ones(N, 1);
  Matrix C = B.transpose() / std::sqrt(double(N));

  AffineStructure structure(
      {monomial(1), monomial(0, -1.0), exponential(1.0, -1.0)});
  return FullModel(structure, {A1, A2, A3}, B, C, true);
}

FullModel beam_model(int num_elements, double alpha1, double alpha2) {
  if (num_elements < 2) throw DomainError("beam needs at least 2 elements");
  const int nel = num_elements;
  const double len = 1.0 / nel;  // element length, unit beam

  // Cubic Hermite element matrices for EI = 1 and rho A = 1.
  Eigen::Matrix4d Se, Me;
  const double l = len;
  Se << 12, 6 * l, -12, 6 * l,
      6 * l, 4 * l * l, -6 * l, 2 * l * l,
      -12, -6 * l, 12, -6 * l,
      6 * l, 2 * l * l, -6 * l, 4 * l * l;
  Se /= l * l * l;
  Me << 156, 22 * l, 54, -13 * l,
      22 * l, 4 * l * l, 13 * l, -3 * l * l,
      54, 13 * l, 156, -22 * l,
      -13 * l, -3 * l * l, -22 * l, 4 * l * l;
  Me *= l / 420.0;

  // Assemble over nodes 0..nel with (deflection, rotation) per node, then
  // clamp node 0.
  const int ndof = 2 * (nel + 1);
  RealMatrix S = RealMatrix::Zero(ndof, ndof);
  RealMatrix M = RealMatrix::Zero(ndof, ndof);
  for (int e = 0; e < nel; ++e) {
    int base = 2 * e;
    S.block<4, 4>(base, base) += Se;
    M.block<4, 4>(base, base) += Me;
  }
  const int N = 2 * nel;
  RealMatrix Sc = S.bottomRightCorner(N, N);
  RealMatrix Mc = M.bottomRightCorner(N, N);

  Matrix A1 = Mc.cast<Complex>();
  Matrix A2 = (alpha1 * Mc + alpha2 * Sc).cast<Complex>();
  Matrix A3 = Sc.cast<Complex>();

  Matrix B = Matrix::Zero(N, 1);
  B(0, 0) = 1.0;
  // Tip deflection: last node's translational state.
  Matrix C = Matrix::Zero(1, N);
  C(0, N - 2) = 1.0;

  AffineStructure structure({monomial(2), monomial(1), monomial(0)});
  return FullModel(structure, {A1, A2, A3}, B, C, true);
}

ToyDelaySystem toy_delay(double a1, double a2, double a3, double b, double c) {
  if (b * c == 0.0) throw DomainError("toy delay needs b*c != 0");

  Matrix A1(1, 1), A2(1, 1), A3(1, 1), Bm(1, 1), Cm(1, 1);
  A1 << a1;
  A2 << a2;
  A3 << a3;
  Bm << b;
  Cm << c;
  AffineStructure structure(
      {monomial(1), monomial(0, -1.0), exponential(1.0, -1.0)});
  FullModel model(structure, {A1, A2, A3}, Bm, Cm, true);

  auto denom = [=](Complex s) { return s * a1 - a2 - std::exp(-s) * a3; };
  auto h = [=](Complex s) { return c * b / denom(s); };
  auto hp = [=](Complex s) {
    Complex d = denom(s);
    return -c * b * (a1 + std::exp(-s) * a3) / (d * d);
  };
  return ToyDelaySystem{std::move(model), AnalyticOracle::scalar(h, hp)};
}

}  // namespace sloewner
