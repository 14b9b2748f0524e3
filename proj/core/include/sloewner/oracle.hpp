#pragma once

#include <functional>
#include <vector>

#include "sloewner/structure.hpp"
#include "sloewner/types.hpp"

namespace sloewner {

// Transfer-function evaluator: the only access to a system that the
// data-driven construction assumes. Implementations must be safe for
// concurrent evaluation.
class TransferOracle {
 public:
  virtual ~TransferOracle() = default;

  virtual Index num_outputs() const = 0;  // p
  virtual Index num_inputs() const = 0;   // m
  virtual Matrix eval(Complex s) const = 0;

  virtual bool has_derivative() const { return false; }
  // Central finite difference with step 1e-6 * max(1, |s|) unless an
  // analytic derivative is available.
  virtual Matrix derivative(Complex s) const;
};

// Closed-form transfer function with optional analytic derivative and a
// declared singularity set (points the evaluator must not be called at).
class AnalyticOracle : public TransferOracle {
 public:
  using MatrixFn = std::function<Matrix(Complex)>;

  AnalyticOracle(Index p, Index m, MatrixFn eval, MatrixFn deriv = nullptr,
                 std::vector<Complex> singularities = {});

  static AnalyticOracle scalar(std::function<Complex(Complex)> h,
                               std::function<Complex(Complex)> h_deriv = nullptr,
                               std::vector<Complex> singularities = {});

  Index num_outputs() const override { return p_; }
  Index num_inputs() const override { return m_; }
  Matrix eval(Complex s) const override;
  bool has_derivative() const override { return static_cast<bool>(deriv_); }
  Matrix derivative(Complex s) const override;

  const std::vector<Complex>& singularities() const { return singularities_; }

 private:
  Index p_, m_;
  MatrixFn eval_, deriv_;
  std::vector<Complex> singularities_;
};

// Evaluates a StructuredRealization / FullModel. Non-owning; the referenced
// realization must outlive the oracle.
class RealizationOracle : public TransferOracle {
 public:
  explicit RealizationOracle(const StructuredRealization& r) : r_(&r) {}

  Index num_outputs() const override { return r_->num_outputs(); }
  Index num_inputs() const override { return r_->num_inputs(); }
  Matrix eval(Complex s) const override { return r_->transfer(s); }
  bool has_derivative() const override { return true; }
  Matrix derivative(Complex s) const override {
    return r_->transfer_derivative(s);
  }

 private:
  const StructuredRealization* r_;
};

}  // namespace sloewner
