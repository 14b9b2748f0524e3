#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sloewner/errors.hpp"
#include "sloewner/types.hpp"

namespace sloewner {

enum class BasisKind { Monomial, Exponential, MonomialExponential, Reciprocal };

// One term h(s) of an affine structure:
//   Monomial(p)              scale * s^p
//   Exponential(tau)         scale * e^{-tau s}
//   MonomialExponential(p,tau) scale * s^p e^{-tau s}
//   Reciprocal               scale / s
// The scale folds signs and coefficients into the function itself, so signed
// families like h(s) = -e^{-tau s} are representable verbatim.
struct BasisFunction {
  BasisKind kind = BasisKind::Monomial;
  int power = 0;       // Monomial, MonomialExponential
  double tau = 0.0;    // Exponential, MonomialExponential
  double scale = 1.0;  // nonzero

  Complex operator()(Complex s) const;
  Complex derivative(Complex s) const;

  // Term in the structure grammar; parse_structure round-trips it.
  std::string to_term() const;

  bool operator==(const BasisFunction&) const = default;
};

BasisFunction monomial(int power, double scale = 1.0);
BasisFunction exponential(double tau, double scale = 1.0);
BasisFunction monomial_exponential(int power, double tau, double scale = 1.0);
BasisFunction reciprocal(double scale = 1.0);

inline Complex eval_basis(const BasisFunction& f, Complex s) { return f(s); }
inline Complex deriv_basis(const BasisFunction& f, Complex s) {
  return f.derivative(s);
}

// Ordered family {h_1, ..., h_K}. Construction rejects K < 2 and families
// that fail a numerical independence probe (a K x K generalized Vandermonde
// matrix at pseudo-random points must have full rank).
class AffineStructure {
 public:
  explicit AffineStructure(std::vector<BasisFunction> basis);

  int size() const { return static_cast<int>(basis_.size()); }
  const BasisFunction& operator[](int k) const { return basis_[k]; }
  const std::vector<BasisFunction>& basis() const { return basis_; }

  Vector values(Complex s) const;       // (h_1(s), ..., h_K(s))
  Vector derivatives(Complex s) const;  // (h_1'(s), ..., h_K'(s))

  bool has_reciprocal() const;
  std::string to_string() const;  // comma-joined grammar terms

  bool operator==(const AffineStructure& other) const {
    return basis_ == other.basis_;
  }

 private:
  std::vector<BasisFunction> basis_;
};

// Parses the structure grammar:
//   term-list = term ("," term)*
//   term      = [sign][coef "*"] factor ("*" factor)* | [sign]coef
//   factor    = "s" ["^" int] | "exp(" signed-real "*s)" | "s^-1"
// Whitespace is ignored. Throws ParseError with byte offset, or
// IndependenceError if the parsed family fails the rank probe.
AffineStructure parse_structure(std::string_view text);

// Realization (A_1, ..., A_K, B, C) whose transfer function is
// H(s) = C (sum_k h_k(s) A_k)^{-1} B.
class StructuredRealization {
 public:
  StructuredRealization(AffineStructure structure, std::vector<Matrix> A,
                        Matrix B, Matrix C, bool is_real = false);

  const AffineStructure& structure() const { return structure_; }
  const std::vector<Matrix>& A() const { return A_; }
  const Matrix& A(int k) const { return A_[k]; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  bool is_real() const { return is_real_; }

  Index order() const { return A_.empty() ? 0 : A_[0].rows(); }  // n
  Index num_inputs() const { return B_.cols(); }                 // m
  Index num_outputs() const { return C_.rows(); }                // p

  // K(s) = sum_k h_k(s) A_k and its derivative.
  Matrix kernel(Complex s) const;
  Matrix kernel_derivative(Complex s) const;

  // C K(s)^{-1} B by LU solve; throws SingularKernel when the reciprocal
  // condition estimate drops below kSingularRcond.
  Matrix transfer(Complex s) const;

  // H'(s) = -C K(s)^{-1} K'(s) K(s)^{-1} B.
  Matrix transfer_derivative(Complex s) const;

 private:
  AffineStructure structure_;
  std::vector<Matrix> A_;
  Matrix B_;
  Matrix C_;
  bool is_real_ = false;
};

// Explicit full-order models share the realization type; only the role
// differs (sampling oracle / projection source instead of reduced model).
using FullModel = StructuredRealization;

inline Matrix eval_kernel(const StructuredRealization& r, Complex s) {
  return r.kernel(s);
}
inline Matrix eval_transfer(const StructuredRealization& r, Complex s) {
  return r.transfer(s);
}
inline Matrix eval_transfer_deriv(const StructuredRealization& r, Complex s) {
  return r.transfer_derivative(s);
}

}  // namespace sloewner
