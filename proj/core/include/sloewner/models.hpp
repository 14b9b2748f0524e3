#pragma once

#include "sloewner/oracle.hpp"
#include "sloewner/structure.hpp"

namespace sloewner {

// Delay system with Toeplitz-plus-corners coupling:
//   A_1 = nu I + T,
//   A_2 = (1/tau)(1/zeta + 1)(T - nu I),
//   A_3 = (1/tau)(1/zeta - 1)(T - nu I),
// where T has ones on the sub/super diagonal and at (1,1), (N,N).
// Structure (s, -1, -e^{-tau s}); B has ones in the first two components,
// C = B^T.
FullModel delay_toeplitz_model(int N, double nu, double zeta, double tau);

struct DuctSystem {
  AnalyticOracle oracle;  // H(s) = rho0 sinh((L-xi0)s/c) / cosh(Ls/c)
  FullModel exact;        // equivalent 4x4 realization, structure
                          // (1, e^{-tau1 s}, e^{-tau2 s})
};

// Acoustic duct of length L driven at one end, pressure read at xi0;
// tau1 = xi0/c (direct path), tau2 = (2L - xi0)/c (reflected path).
DuctSystem acoustic_duct(double L, double xi0, double c, double rho0);

// Heated rod with distributed control and delayed feedback, centered finite
// differences with step pi/(N+1):
//   x' = (L_N + diag(-2 sin xi_i)) x + diag(2 sin xi_i) x(t-1) + B u,
// B all ones, C = B^T/||B||. Structure (s, -1, -e^{-s}).
FullModel heated_rod_model(int N);

// Cantilevered Euler-Bernoulli beam, cubic Hermite finite elements on a unit
// beam clamped at the left end; N = 2*num_elements states (deflection and
// rotation per free node). Structure (s^2, s, 1) with A_1 = M,
// A_2 = alpha1 M + alpha2 S (Rayleigh damping), A_3 = S; B applies a point
// force at the first free deflection, C reads the tip deflection.
FullModel beam_model(int num_elements, double alpha1, double alpha2);

struct ToyDelaySystem {
  FullModel model;        // 1x1, structure (s, -1, -e^{-s})
  AnalyticOracle oracle;  // H(s) = cb / (s a1 - a2 - e^{-s} a3)
};

ToyDelaySystem toy_delay(double a1, double a2, double a3, double b, double c);

}  // namespace sloewner
