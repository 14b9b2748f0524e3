#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sloewner {

// Base of all library errors. The realization pipeline annotates errors with
// the stage they came from; `describe()` includes that tag.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}

  const std::string& stage() const { return stage_; }
  void set_stage(std::string_view s) {
    if (stage_.empty()) stage_.assign(s);
  }
  std::string describe() const {
    return stage_.empty() ? std::string(what())
                          : "[" + stage_ + "] " + what();
  }

 private:
  std::string stage_;
};

// Invalid or inconsistent input (CLI exit code 2).
class DataError : public Error {
  using Error::Error;
};

// Numerical breakdown: singular systems, rank defects and the like
// (CLI exit code 3).
class NumericError : public Error {
  using Error::Error;
};

class DomainError : public DataError {
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(std::string msg, std::size_t offset, std::string expected)
      : DataError(msg + " at byte " + std::to_string(offset) + " (expected " +
                  expected + ")"),
        offset_(offset),
        expected_(std::move(expected)) {}
  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class IndependenceError : public DataError {
  using DataError::DataError;
};
class DuplicatePointError : public DataError {
  using DataError::DataError;
};
class OracleError : public DataError {
  using DataError::DataError;
};
class NotClosedError : public DataError {
  using DataError::DataError;
};
class SizeMismatchError : public DataError {
  using DataError::DataError;
};
class ClosureError : public DataError {
  using DataError::DataError;
};
class MissingThetaError : public DataError {
  using DataError::DataError;
};
class MissingHermiteDataError : public DataError {
  using DataError::DataError;
};
class ZeroSampleError : public DataError {
  using DataError::DataError;
};
class RankError : public DataError {
  using DataError::DataError;
};

class SingularKernel : public NumericError {
 public:
  SingularKernel(std::complex<double> point, double rcond)
      : NumericError("kernel singular at s = (" + std::to_string(point.real()) +
                     ", " + std::to_string(point.imag()) +
                     "i), rcond = " + std::to_string(rcond)),
        point_(point),
        rcond_(rcond) {}
  std::complex<double> point() const { return point_; }
  double rcond() const { return rcond_; }

 private:
  std::complex<double> point_;
  double rcond_;
};

class DegenerateDataError : public NumericError {
  using NumericError::NumericError;
};
class TransformSingularError : public NumericError {
  using NumericError::NumericError;
};
class DenominatorError : public NumericError {
  using NumericError::NumericError;
};
class RegularityError : public NumericError {
  using NumericError::NumericError;
};

class SingularSystemError : public NumericError {
 public:
  SingularSystemError(std::string msg, double smallest_sv, double residual)
      : NumericError(std::move(msg)),
        smallest_sv_(smallest_sv),
        residual_(residual) {}
  double smallest_singular_value() const { return smallest_sv_; }
  double residual() const { return residual_; }

 private:
  double smallest_sv_;
  double residual_;
};

class HaarViolationError : public NumericError {
 public:
  HaarViolationError(std::string msg, std::ptrdiff_t i, std::ptrdiff_t j)
      : NumericError(std::move(msg) + " (entry " + std::to_string(i) + "," +
                     std::to_string(j) + ")"),
        i_(i),
        j_(j) {}
  std::ptrdiff_t row() const { return i_; }
  std::ptrdiff_t col() const { return j_; }

 private:
  std::ptrdiff_t i_, j_;
};

class RankMismatchError : public NumericError {
  using NumericError::NumericError;
};

}  // namespace sloewner
