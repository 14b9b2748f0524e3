#include "sloewner/oracle.hpp"

#include <cmath>

#include "sloewner/errors.hpp"

namespace sloewner {

Matrix TransferOracle::derivative(Complex s) const {
  double h = 1e-6 * std::max(1.0, std::abs(s));
  return (eval(s + h) - eval(s - h)) / (2.0 * h);
}

AnalyticOracle::AnalyticOracle(Index p, Index m, MatrixFn eval, MatrixFn deriv,
                               std::vector<Complex> singularities)
    : p_(p),
      m_(m),
      eval_(std::move(eval)),
      deriv_(std::move(deriv)),
      singularities_(std::move(singularities)) {}

AnalyticOracle AnalyticOracle::scalar(std::function<Complex(Complex)> h,
                                      std::function<Complex(Complex)> h_deriv,
                                      std::vector<Complex> singularities) {
  MatrixFn eval = [h = std::move(h)](Complex s) {
    Matrix v(1, 1);
    v(0, 0) = h(s);
    return v;
  };
  MatrixFn deriv;
  if (h_deriv) {
    deriv = [h_deriv = std::move(h_deriv)](Complex s) {
      Matrix v(1, 1);
      v(0, 0) = h_deriv(s);
      return v;
    };
  }
  return AnalyticOracle(1, 1, std::move(eval), std::move(deriv),
                        std::move(singularities));
}

Matrix AnalyticOracle::eval(Complex s) const {
  Matrix v = eval_(s);
  if (!v.allFinite())
    throw OracleError("oracle evaluation not finite at s = (" +
                      std::to_string(s.real()) + ", " +
                      std::to_string(s.imag()) + "i)");
  return v;
}

Matrix AnalyticOracle::derivative(Complex s) const {
  if (!deriv_) return TransferOracle::derivative(s);
  Matrix v = deriv_(s);
  if (!v.allFinite())
    throw OracleError("oracle derivative not finite at s = (" +
                      std::to_string(s.real()) + ", " +
                      std::to_string(s.imag()) + "i)");
  return v;
}

}  // namespace sloewner
