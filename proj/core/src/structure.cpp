#include "sloewner/structure.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <random>
#include <utility>

namespace sloewner {

namespace {

// Exact integer power; avoids the exp/log route of std::pow and keeps
// s^0 == 1 even at s = 0.
Complex pow_int(Complex s, int p) {
  Complex acc = 1.0;
  for (int i = 0; i < p; ++i) acc *= s;
  return acc;
}

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string power_token(int p) {
  return p == 1 ? "s" : "s^" + std::to_string(p);
}

}  // namespace

BasisFunction monomial(int power, double scale) {
  if (power < 0) throw DomainError("monomial power must be nonnegative");
  if (scale == 0.0) throw DomainError("basis scale must be nonzero");
  return {BasisKind::Monomial, power, 0.0, scale};
}

BasisFunction exponential(double tau, double scale) {
  if (scale == 0.0) throw DomainError("basis scale must be nonzero");
  return {BasisKind::Exponential, 0, tau, scale};
}

BasisFunction monomial_exponential(int power, double tau, double scale) {
  if (power < 0) throw DomainError("monomial power must be nonnegative");
  if (scale == 0.0) throw DomainError("basis scale must be nonzero");
  return {BasisKind::MonomialExponential, power, tau, scale};
}

BasisFunction reciprocal(double scale) {
  if (scale == 0.0) throw DomainError("basis scale must be nonzero");
  return {BasisKind::Reciprocal, 0, 0.0, scale};
}

Complex BasisFunction::operator()(Complex s) const {
  switch (kind) {
    case BasisKind::Monomial:
      return scale * pow_int(s, power);
    case BasisKind::Exponential:
      return scale * std::exp(-tau * s);
    case BasisKind::MonomialExponential:
      return scale * pow_int(s, power) * std::exp(-tau * s);
    case BasisKind::Reciprocal:
      if (s == 0.0) throw DomainError("reciprocal basis undefined at s = 0");
      return scale / s;
  }
  throw DomainError("unknown basis kind");
}

Complex BasisFunction::derivative(Complex s) const {
  switch (kind) {
    case BasisKind::Monomial:
      if (power == 0) return 0.0;
      return scale * double(power) * pow_int(s, power - 1);
    case BasisKind::Exponential:
      return scale * (-tau) * std::exp(-tau * s);
    case BasisKind::MonomialExponential: {
      Complex poly = power == 0 ? Complex(0.0)
                                : double(power) * pow_int(s, power - 1);
      return scale * (poly - tau * pow_int(s, power)) * std::exp(-tau * s);
    }
    case BasisKind::Reciprocal:
      if (s == 0.0) throw DomainError("reciprocal basis undefined at s = 0");
      return -scale / (s * s);
  }
  throw DomainError("unknown basis kind");
}

std::string BasisFunction::to_term() const {
  std::string prefix;
  if (scale == -1.0) {
    prefix = "-";
  } else if (scale != 1.0) {
    prefix = fmt_double(scale) + "*";
  }
  switch (kind) {
    case BasisKind::Monomial:
      if (power == 0) return fmt_double(scale);
      return prefix + power_token(power);
    case BasisKind::Exponential:
      return prefix + "exp(" + fmt_double(-tau) + "*s)";
    case BasisKind::MonomialExponential:
      return prefix + power_token(power) + "*exp(" + fmt_double(-tau) + "*s)";
    case BasisKind::Reciprocal:
      return prefix + "s^-1";
  }
  return {};
}

AffineStructure::AffineStructure(std::vector<BasisFunction> basis)
    : basis_(std::move(basis)) {
  if (basis_.size() < 2)
    throw DataError("affine structure needs at least two basis functions");
  for (const auto& f : basis_)
    if (f.scale == 0.0) throw DomainError("basis scale must be nonzero");

  // Rank probe at K pseudo-random points: the generalized Vandermonde matrix
  // [h_k(z_j)] must have full rank. Points stay away from 0 so the probe is
  // valid for the reciprocal term as well.
  const int K = size();
  std::mt19937_64 rng(0x51f0e57aULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix probe(K, K);
  for (int j = 0; j < K; ++j) {
    double radius = 0.7 + 1.2 * unif(rng);
    double angle = 2.0 * M_PI * unif(rng);
    Complex z = radius * Complex(std::cos(angle), std::sin(angle));
    for (int k = 0; k < K; ++k) probe(j, k) = basis_[k](z);
  }
  Eigen::JacobiSVD<Matrix> svd(probe);
  const auto& sv = svd.singularValues();
  if (sv(K - 1) <= 1e-10 * sv(0))
    throw IndependenceError("basis functions are numerically dependent: " +
                            to_string());
}

Vector AffineStructure::values(Complex s) const {
  Vector v(size());
  for (int k = 0; k < size(); ++k) v(k) = basis_[k](s);
  return v;
}

Vector AffineStructure::derivatives(Complex s) const {
  Vector v(size());
  for (int k = 0; k < size(); ++k) v(k) = basis_[k].derivative(s);
  return v;
}

bool AffineStructure::has_reciprocal() const {
  for (const auto& f : basis_)
    if (f.kind == BasisKind::Reciprocal) return true;
  return false;
}

std::string AffineStructure::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    if (i) out += ",";
    out += basis_[i].to_term();
  }
  return out;
}

namespace {

class StructureParser {
 public:
  explicit StructureParser(std::string_view text) : text_(text) {}

  std::vector<BasisFunction> parse() {
    std::vector<BasisFunction> terms;
    terms.push_back(parse_term());
    skip_ws();
    while (!eof()) {
      expect(',');
      terms.push_back(parse_term());
      skip_ws();
    }
    return terms;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  bool consume(char c) {
    skip_ws();
    if (!eof() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c))
      throw ParseError("unexpected input", pos_, std::string("'") + c + "'");
  }
  bool starts_with(std::string_view s) {
    skip_ws();
    return text_.substr(pos_, s.size()) == s;
  }

  double parse_real(const char* what) {
    skip_ws();
    double value = 0;
    auto first = text_.data() + pos_;
    auto last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc())
      throw ParseError("cannot read number", pos_, what);
    pos_ += std::size_t(ptr - first);
    return value;
  }

  int parse_int(const char* what) {
    skip_ws();
    int value = 0;
    auto first = text_.data() + pos_;
    auto last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc())
      throw ParseError("cannot read integer", pos_, what);
    pos_ += std::size_t(ptr - first);
    return value;
  }

  // factor = "s" ["^" int] | "exp(" signed-real "*s)"
  // Accumulates into power / tau; "s^-1" marks the reciprocal kind.
  void parse_factor(int& power, double& tau, int& recip) {
    skip_ws();
    if (starts_with("exp")) {
      pos_ += 3;
      expect('(');
      double c = parse_real("signed real");
      expect('*');
      expect('s');
      expect(')');
      tau += -c;  // exp(c*s) = e^{-tau s} with tau = -c
      return;
    }
    if (peek() == 's') {
      ++pos_;
      skip_ws();
      if (!eof() && text_[pos_] == '^') {
        ++pos_;
        std::size_t at = pos_;
        int p = parse_int("integer power");
        if (p == -1) {
          ++recip;
        } else if (p < 0) {
          throw ParseError("unsupported power", at, "integer >= 0 or -1");
        } else {
          power += p;
        }
      } else {
        power += 1;
      }
      return;
    }
    throw ParseError("unexpected input", pos_, "'s' or 'exp('");
  }

  BasisFunction parse_term() {
    skip_ws();
    std::size_t term_start = pos_;
    double sign = 1.0;
    if (consume('-'))
      sign = -1.0;
    else
      consume('+');

    skip_ws();
    double coef = 1.0;
    bool have_factors = false;
    int power = 0, recip = 0;
    double tau = 0.0;

    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t at = pos_;
      coef = parse_real("decimal real");
      if (coef == 0.0)
        throw ParseError("coefficient must be nonzero", at, "nonzero real");
      skip_ws();
      if (consume('*')) {
        parse_factor(power, tau, recip);
        have_factors = true;
      }
    } else {
      parse_factor(power, tau, recip);
      have_factors = true;
    }
    while (have_factors && consume('*')) parse_factor(power, tau, recip);

    double scale = sign * coef;
    if (!have_factors) return monomial(0, scale);
    if (recip > 0) {
      if (recip > 1 || power != 0 || tau != 0.0)
        throw ParseError("reciprocal factor cannot be combined", term_start,
                         "standalone s^-1");
      return reciprocal(scale);
    }
    if (tau == 0.0) return monomial(power, scale);
    if (power == 0) return exponential(tau, scale);
    return monomial_exponential(power, tau, scale);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

AffineStructure parse_structure(std::string_view text) {
  StructureParser parser(text);
  return AffineStructure(parser.parse());
}

StructuredRealization::StructuredRealization(AffineStructure structure,
                                             std::vector<Matrix> A, Matrix B,
                                             Matrix C, bool is_real)
    : structure_(std::move(structure)),
      A_(std::move(A)),
      B_(std::move(B)),
      C_(std::move(C)),
      is_real_(is_real) {
  if (A_.size() != std::size_t(structure_.size()))
    throw DataError("realization needs one coefficient matrix per basis function");
  const Index n = A_[0].rows();
  for (const auto& Ak : A_)
    if (Ak.rows() != n || Ak.cols() != n)
      throw DataError("coefficient matrices must be square and equal-sized");
  if (B_.rows() != n) throw DataError("B must have n rows");
  if (C_.cols() != n) throw DataError("C must have n columns");

  if (is_real_) {
    double max_abs = 0.0, max_imag = 0.0;
    auto scan = [&](const Matrix& M) {
      for (Index j = 0; j < M.cols(); ++j)
        for (Index i = 0; i < M.rows(); ++i) {
          max_abs = std::max(max_abs, std::abs(M(i, j)));
          max_imag = std::max(max_imag, std::abs(M(i, j).imag()));
        }
    };
    for (const auto& Ak : A_) scan(Ak);
    scan(B_);
    scan(C_);
    if (max_imag > 1e-10 * (1.0 + max_abs))
      throw DataError("realization flagged real has non-real entries");
  }
}

Matrix StructuredRealization::kernel(Complex s) const {
  Vector h = structure_.values(s);
  Matrix K = h(0) * A_[0];
  for (int k = 1; k < structure_.size(); ++k) K += h(k) * A_[k];
  return K;
}

Matrix StructuredRealization::kernel_derivative(Complex s) const {
  Vector h = structure_.derivatives(s);
  Matrix K = h(0) * A_[0];
  for (int k = 1; k < structure_.size(); ++k) K += h(k) * A_[k];
  return K;
}

Matrix StructuredRealization::transfer(Complex s) const {
  Matrix K = kernel(s);
  Eigen::PartialPivLU<Matrix> lu(K);
  double rc = lu.rcond();
  if (!std::isfinite(rc) || rc < kSingularRcond) throw SingularKernel(s, rc);
  return C_ * lu.solve(B_);
}

Matrix StructuredRealization::transfer_derivative(Complex s) const {
  Matrix K = kernel(s);
  Eigen::PartialPivLU<Matrix> lu(K);
  double rc = lu.rcond();
  if (!std::isfinite(rc) || rc < kSingularRcond) throw SingularKernel(s, rc);
  Matrix X = lu.solve(B_);
  Matrix Y = kernel_derivative(s) * X;
  return -C_ * lu.solve(Y);
}

}  // namespace sloewner
