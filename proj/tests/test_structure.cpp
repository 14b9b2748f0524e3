#include <doctest.h>

#include <random>

#include "sloewner/models.hpp"
#include "sloewner/structure.hpp"
#include "test_support.hpp"

using namespace sloewner;
using test::rel_diff;

TEST_CASE("basis evaluation matches the closed forms") {
  CHECK(monomial(1)(Complex(0, 2)) == Complex(0, 2));
  CHECK(exponential(1.0, -1.0)(Complex(0, 0)) == Complex(-1.0));
  // s e^{-s} at s = 1
  CHECK(rel_diff(monomial_exponential(1, 1.0)(1.0), Complex(0.36787944117144233)) < 1e-15);
  CHECK(rel_diff(reciprocal(2.0)(Complex(0, 1)), Complex(0, -2)) < 1e-15);
  CHECK(monomial(0, 3.5)(Complex(100, -5)) == Complex(3.5));
  // s^0 is 1 even at the origin
  CHECK(monomial(0)(Complex(0, 0)) == Complex(1.0));
}

TEST_CASE("basis derivatives") {
  CHECK(monomial(0).derivative(Complex(3, 4)) == Complex(0.0));
  CHECK(exponential(1.0).derivative(Complex(0, 0)) == Complex(-1.0));
  CHECK(monomial(2).derivative(3.0) == Complex(6.0));
  CHECK(rel_diff(reciprocal().derivative(2.0), Complex(-0.25)) < 1e-15);
  // (p s^{p-1} - tau s^p) e^{-tau s} at s = 1, p = 1, tau = 2
  Complex expected = (1.0 - 2.0) * std::exp(-2.0);
  CHECK(rel_diff(monomial_exponential(1, 2.0).derivative(1.0), expected) < 1e-14);
}

TEST_CASE("basis domain errors") {
  CHECK_THROWS_AS(reciprocal()(Complex(0, 0)), DomainError);
  CHECK_THROWS_AS(reciprocal().derivative(Complex(0, 0)), DomainError);
  CHECK_THROWS_AS(monomial(1, 0.0), DomainError);
  CHECK_THROWS_AS(monomial(-2), DomainError);
}

TEST_CASE("structure requires K >= 2 and independence") {
  CHECK_THROWS_AS(AffineStructure({monomial(1)}), DataError);
  CHECK_THROWS_AS(AffineStructure({monomial(1), monomial(1)}),
                  IndependenceError);
  CHECK_THROWS_AS(AffineStructure({monomial(1), monomial(1, 2.0)}),
                  IndependenceError);
  CHECK_NOTHROW(AffineStructure({monomial(1), monomial(0, -1.0)}));
  CHECK_NOTHROW(AffineStructure(
      {monomial(2), monomial(1), monomial(0), exponential(1.0)}));
}

TEST_CASE("grammar parsing") {
  AffineStructure delay = parse_structure("s,-1,-exp(-1*s)");
  REQUIRE(delay.size() == 3);
  CHECK(delay[0] == monomial(1));
  CHECK(delay[1] == monomial(0, -1.0));
  CHECK(delay[2] == exponential(1.0, -1.0));

  AffineStructure second = parse_structure("s^2,s,1");
  CHECK(second[0] == monomial(2));
  CHECK(second[1] == monomial(1));
  CHECK(second[2] == monomial(0));

  AffineStructure rlc = parse_structure("s,1,s^-1");
  CHECK(rlc[2] == reciprocal());

  AffineStructure scaled = parse_structure(" 2.5*s^2*exp(0.5*s) , -3 ");
  CHECK(scaled[0] == monomial_exponential(2, -0.5, 2.5));
  CHECK(scaled[1] == monomial(0, -3.0));

  CHECK_THROWS_AS(parse_structure("s,s"), IndependenceError);
  CHECK_THROWS_AS(parse_structure("s,"), ParseError);
  CHECK_THROWS_AS(parse_structure("q,1"), ParseError);
  CHECK_THROWS_AS(parse_structure("s^-2,1"), ParseError);
  CHECK_THROWS_AS(parse_structure("0*s,1"), ParseError);
  CHECK_THROWS_AS(parse_structure("s^-1*exp(-1*s),1"), ParseError);

  try {
    parse_structure("s, qq");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(!e.expected().empty());
  }
}

TEST_CASE("terms round-trip through the grammar") {
  const char* inputs[] = {"s,-1,-exp(-1*s)", "s^2,s,1", "s,1,s^-1",
                          "2.5*s^2*exp(-0.5*s),-3,0.125*exp(2*s)"};
  for (const char* text : inputs) {
    AffineStructure a = parse_structure(text);
    AffineStructure b = parse_structure(a.to_string());
    CHECK(a == b);
  }
}

namespace {

StructuredRealization first_order_lag() {
  // H(s) = 1/(s+1)
  Matrix one = Matrix::Identity(1, 1);
  AffineStructure structure({monomial(1), monomial(0, -1.0)});
  return StructuredRealization(structure, {one, -one}, one, one);
}

}  // namespace

TEST_CASE("kernel evaluation") {
  AffineStructure structure({monomial(1), monomial(0, -1.0)});
  Matrix I2 = Matrix::Identity(2, 2);
  StructuredRealization r(structure, {I2, I2}, I2, I2);
  CHECK((r.kernel(3.0) - 2.0 * I2).norm() == 0.0);

  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  CHECK(rel_diff(toy.model.kernel(Complex(0, 0))(0, 0), Complex(1.5)) < 1e-15);
}

TEST_CASE("kernel is linear in each coefficient matrix") {
  std::mt19937_64 rng(7);
  AffineStructure structure(
      {monomial(1), monomial(0, -1.0), exponential(0.5, -1.0)});
  FullModel model = test::random_model(structure, 4, 1, 1, rng);
  Complex s(0.3, 1.7);
  for (int k = 0; k < 3; ++k) {
    std::vector<Matrix> doubled = model.A();
    doubled[k] *= 2.0;
    FullModel scaled(structure, doubled, model.B(), model.C());
    Matrix extra = structure[k](s) * model.A(k);
    CHECK((scaled.kernel(s) - model.kernel(s) - extra).norm() <=
          1e-14 * model.kernel(s).norm());
  }
}

TEST_CASE("transfer function values") {
  StructuredRealization lag = first_order_lag();
  CHECK(rel_diff(lag.transfer(1.0)(0, 0), Complex(0.5)) < 1e-15);

  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  CHECK(rel_diff(toy.model.transfer(Complex(0, 0))(0, 0),
                 Complex(2.0 / 3.0)) < 1e-15);

  auto duct = acoustic_duct(1.0, 0.5, 1.0, 1.0);
  CHECK(std::abs(duct.exact.transfer(Complex(0, 0))(0, 0)) < 1e-15);
}

TEST_CASE("transfer on 1x1 systems equals the scalar closed form") {
  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  std::mt19937_64 rng(11);
  for (Complex s : test::random_points(20, rng)) {
    Complex closed = toy.oracle.eval(s)(0, 0);
    CHECK(rel_diff(toy.model.transfer(s)(0, 0), closed) < 1e-12);
  }
}

TEST_CASE("singular kernel raises") {
  StructuredRealization lag = first_order_lag();
  // K(s) = s + 1 vanishes at s = -1.
  CHECK_THROWS_AS(lag.transfer(Complex(-1.0, 0.0)), SingularKernel);
  try {
    lag.transfer(Complex(-1.0, 0.0));
  } catch (const SingularKernel& e) {
    CHECK(e.point() == Complex(-1.0, 0.0));
    CHECK(e.rcond() < 1e-14);
  }
}

TEST_CASE("transfer derivative closed form and finite differences") {
  StructuredRealization lag = first_order_lag();
  CHECK(rel_diff(lag.transfer_derivative(1.0)(0, 0), Complex(-0.25)) < 1e-13);

  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  Complex s(0.0, 0.3);
  double h = 1e-6 * std::max(1.0, std::abs(s));
  Complex fd =
      (toy.model.transfer(s + h)(0, 0) - toy.model.transfer(s - h)(0, 0)) /
      (2.0 * h);
  CHECK(rel_diff(toy.model.transfer_derivative(s)(0, 0), fd) < 1e-6);

  // Zero coefficient on the s-term freezes the kernel: derivative vanishes.
  AffineStructure structure({monomial(1), monomial(0, -1.0)});
  Matrix one = Matrix::Identity(1, 1);
  StructuredRealization frozen(structure, {0.0 * one, -one}, one, one);
  CHECK(std::abs(frozen.transfer_derivative(2.0)(0, 0)) == 0.0);
}

TEST_CASE("transfer derivative matches finite differences at random points") {
  std::mt19937_64 rng(23);
  std::vector<AffineStructure> structures = {
      AffineStructure({monomial(1), monomial(0, -1.0), exponential(1.0, -1.0)}),
      AffineStructure({monomial(2), monomial(1), monomial(0)}),
      AffineStructure({monomial(1), monomial(0), reciprocal()}),
  };
  for (const auto& structure : structures) {
    FullModel model = test::random_model(structure, 5, 1, 1, rng);
    int checked = 0;
    for (Complex s : test::random_points(40, rng)) {
      if (checked == 20) break;
      Eigen::PartialPivLU<Matrix> lu(model.kernel(s));
      if (lu.rcond() < 1e-6) continue;
      ++checked;
      double h = 1e-6 * std::max(1.0, std::abs(s));
      Matrix fd = (model.transfer(s + h) - model.transfer(s - h)) / (2.0 * h);
      CHECK(rel_diff(model.transfer_derivative(s), fd) < 1e-5);
    }
    CHECK(checked == 20);
  }
}

TEST_CASE("realization dimension and realness validation") {
  AffineStructure structure({monomial(1), monomial(0, -1.0)});
  Matrix I2 = Matrix::Identity(2, 2);
  Matrix I3 = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(StructuredRealization(structure, {I2, I3}, I2, I2),
                  DataError);
  CHECK_THROWS_AS(StructuredRealization(structure, {I2}, I2, I2), DataError);

  Matrix complex_entry = I2;
  complex_entry(0, 1) = Complex(0.0, 0.5);
  CHECK_THROWS_AS(
      StructuredRealization(structure, {complex_entry, I2}, I2, I2, true),
      DataError);
  CHECK_NOTHROW(
      StructuredRealization(structure, {complex_entry, I2}, I2, I2, false));
}
