#include <doctest.h>

#include <random>

#include "sloewner/loewner.hpp"
#include "sloewner/models.hpp"
#include "sloewner/solver.hpp"
#include "test_support.hpp"

using namespace sloewner;
using test::rel_diff;

namespace {

LeftSample left(Complex mu, Complex ell, Complex f) {
  return {mu, Vector::Constant(1, ell), Vector::Constant(1, f)};
}

RightSample right(Complex sigma, Complex r, Complex g) {
  return {sigma, Vector::Constant(1, r), Vector::Constant(1, g)};
}

// Samples a model into an explicit grouping (points given per group).
GroupedData sample_groups(const TransferOracle& oracle,
                          const std::vector<std::vector<Complex>>& left_pts,
                          const std::vector<std::vector<Complex>>& right_pts) {
  std::vector<std::vector<LeftSample>> lg;
  std::vector<std::vector<RightSample>> rg;
  for (const auto& pts : left_pts) {
    std::vector<LeftSample> g;
    for (Complex s : pts) {
      Vector one = Vector::Ones(1);
      g.push_back({s, one, oracle.eval(s).transpose() * one});
    }
    lg.push_back(std::move(g));
  }
  for (const auto& pts : right_pts) {
    std::vector<RightSample> g;
    for (Complex s : pts) {
      Vector one = Vector::Ones(1);
      g.push_back({s, one, oracle.eval(s) * one});
    }
    rg.push_back(std::move(g));
  }
  return make_grouped(1, 1, std::move(lg), std::move(rg));
}

}  // namespace

TEST_CASE("SISO P choice is the sample diagonal") {
  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  RealizationOracle oracle(toy.model);
  GroupedData g = sample_groups(oracle, {{0.5}}, {{1.0}, {-1.0}});
  PMatrixSet pset = choose_p_siso(g);
  CHECK(pset.diagonal);
  CHECK(rel_diff(pset.PF[0](0, 0), oracle.eval(0.5)(0, 0)) < 1e-15);
  CHECK(rel_diff(pset.PG[0](0, 0), oracle.eval(1.0)(0, 0)) < 1e-15);
  CHECK(rel_diff(pset.PG[1](0, 0), oracle.eval(-1.0)(0, 0)) < 1e-15);
  CHECK(pset.B(0, 0) == Complex(1.0));
  CHECK(pset.C(0, 0) == Complex(1.0));

  SUBCASE("diagonal values") {
    GroupedData g2;
    g2.m = g2.p = 1;
    g2.group_size = 2;
    g2.left_groups = {{left(1.0, 1.0, 2.0), left(2.0, 1.0, Complex(0, 3))}};
    g2.right_groups = {{right(3.0, 1.0, 1.0), right(4.0, 1.0, 2.0)}};
    PMatrixSet p2 = choose_p_siso(g2);
    CHECK(p2.PF[0](0, 0) == Complex(2.0));
    CHECK(p2.PF[0](1, 1) == Complex(0, 3));
    CHECK(p2.PF[0](0, 1) == Complex(0.0));
  }

  SUBCASE("zero sample") {
    GroupedData g3;
    g3.m = g3.p = 1;
    g3.group_size = 1;
    g3.left_groups = {{left(1.0, 1.0, 0.0)}};
    g3.right_groups = {{right(3.0, 1.0, 1.0)}};
    CHECK_THROWS_AS(choose_p_siso(g3), ZeroSampleError);
  }
}

TEST_CASE("MIMO P choice completes the data blocks") {
  std::mt19937_64 rng(31);

  SUBCASE("identity data block needs no completion") {
    GroupedData g;
    g.m = g.p = 2;
    g.group_size = 2;
    Vector e0 = Vector::Zero(2), e1 = Vector::Zero(2);
    e0(0) = 1.0;
    e1(1) = 1.0;
    g.left_groups = {{LeftSample{1.0, e0, e0}, LeftSample{2.0, e1, e1}}};
    g.right_groups = {{RightSample{3.0, e0, e0}, RightSample{4.0, e1, e1}}};
    PMatrixSet pset = choose_p_mimo(g);
    CHECK((pset.PF[0] - Matrix::Identity(2, 2)).norm() < 1e-14);
    CHECK(pset.B.rows() == 2);
    CHECK((pset.B - Matrix::Identity(2, 2)).norm() == 0.0);
  }

  SUBCASE("random wide block gives a well conditioned P") {
    GroupedData g;
    g.m = g.p = 1;
    g.group_size = 3;
    std::vector<LeftSample> lg;
    std::vector<RightSample> rgr;
    for (int i = 0; i < 3; ++i) {
      Complex f(0.1 + 0.5 * i, 0.3 - 0.2 * i);
      lg.push_back(left(Complex(i + 1, 0.5), 1.0, f));
      rgr.push_back(right(Complex(0, i + 1), 1.0, f * 2.0));
    }
    g.left_groups = {lg};
    g.right_groups = {rgr};
    PMatrixSet pset = choose_p_mimo(g);
    Eigen::JacobiSVD<Matrix> svd(pset.PF[0]);
    double cond = svd.singularValues()(0) / svd.singularValues()(2);
    CHECK(cond < 1e3);
    // First identity of the construction: F^T = P_F^T B.
    Matrix Ft(3, 1);
    for (int i = 0; i < 3; ++i) Ft(i, 0) = lg[i].f(0);
    CHECK((pset.PF[0].transpose() * pset.B - Ft).norm() < 1e-14);
  }

  SUBCASE("row-deficient data block") {
    GroupedData g;
    g.m = g.p = 2;
    g.group_size = 2;
    Vector e0 = Vector::Zero(2);
    e0(0) = 1.0;
    // Both samples carry the same value direction: rank 1.
    g.left_groups = {{LeftSample{1.0, e0, e0}, LeftSample{2.0, e0, e0}}};
    g.right_groups = {
        {RightSample{3.0, e0, e0}, RightSample{4.0, Vector(e0), Vector(e0)}}};
    CHECK_THROWS_AS(choose_p_mimo(g), RankError);
  }
}

TEST_CASE("toy delay coefficients are recovered exactly") {
  const double a1 = 1.0, a2 = -2.0, a3 = 0.5, b = 1.0, c = 1.0;
  auto toy = toy_delay(a1, a2, a3, b, c);
  RealizationOracle oracle(toy.model);
  GroupedData groups = sample_groups(oracle, {{0.5}}, {{1.0}, {-1.0}});
  PMatrixSet pset = choose_p_siso(groups);
  StructuredRealization r =
      solve_additional_points(groups, toy.model.structure(), pset);

  CHECK(rel_diff(r.A(0)(0, 0), Complex(a1 / (c * b))) < 1e-10);
  CHECK(rel_diff(r.A(1)(0, 0), Complex(a2 / (c * b))) < 1e-10);
  CHECK(rel_diff(r.A(2)(0, 0), Complex(a3 / (c * b))) < 1e-10);

  // Independent route: assemble and solve the 3x3 Haar system directly.
  Matrix haar(3, 3);
  Vector ones = Vector::Ones(3);
  std::vector<Complex> pts = {0.5, 1.0, -1.0};
  for (int i = 0; i < 3; ++i) {
    Complex z = pts[i];
    Complex h = oracle.eval(z)(0, 0);
    haar(i, 0) = h * z;
    haar(i, 1) = h * -1.0;
    haar(i, 2) = h * -std::exp(-z);
  }
  Vector direct = haar.fullPivLu().solve(ones);
  for (int k = 0; k < 3; ++k)
    CHECK(rel_diff(r.A(k)(0, 0), direct(k)) < 1e-12);

  // And the transfer function is recovered everywhere.
  std::mt19937_64 rng(3);
  for (Complex s : test::random_points(10, rng))
    CHECK(rel_diff(r.transfer(s)(0, 0), oracle.eval(s)(0, 0)) < 1e-9);
}

TEST_CASE("interpolation residuals hold on the delay benchmark at n = 4") {
  FullModel model = delay_toeplitz_model(60, 5.0, 0.01, 1.0);
  RealizationOracle oracle(model);
  SampleRequest req;
  auto omegas = test::logspace(1.0, 100.0, 6);
  for (int t = 0; t < 6; ++t) {
    Complex s(0.0, omegas[t]);
    auto& side = (t % 3 == 0) ? req.left_points : req.right_points;
    side.push_back(s);
    side.push_back(std::conj(s));
  }
  InterpolationData pool = tangential_sample(oracle, req);
  RealizeOptions opts;
  opts.method = RealizeOptions::Method::Additional;
  opts.make_real = true;
  StructuredRealization r = realize(pool, model.structure(), opts);
  CHECK(r.order() == 4);
  CHECK(interpolation_residuals(r, pool).worst() < 1e-9);
  CHECK(r.is_real());
}

TEST_CASE("K = 2 additional-points route agrees with the pencil route") {
  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  RealizationOracle oracle(toy.model);
  AffineStructure structure({monomial(1), exponential(1.0, -1.0)});

  GroupedData groups = sample_groups(
      oracle, {{Complex(0, 0.5), Complex(0.3, 1.0), 0.9}},
      {{Complex(0, 1.5), Complex(0.6, -0.8), 1.7}});
  PMatrixSet pset = choose_p_siso(groups);
  StructuredRealization add =
      solve_additional_points(groups, structure, pset);

  InterpolationData flat;
  flat.left = groups.left_groups[0];
  flat.right = groups.right_groups[0];
  StructuredRealization k2 = k2_realization(flat, structure);

  for (double w : test::logspace(0.1, 10.0, 60)) {
    Complex s(0, w);
    CHECK(rel_diff(add.transfer(s), k2.transfer(s)) < 1e-10);
  }
}

TEST_CASE("Haar fast path and Kronecker system agree") {
  std::mt19937_64 rng(101);
  std::vector<AffineStructure> structures = {
      AffineStructure({monomial(1), monomial(0, -1.0), exponential(0.7, -1.0)}),
      AffineStructure({monomial(2), monomial(1), monomial(0)}),
      AffineStructure(
          {monomial(2), monomial(1), monomial(0), exponential(1.0)}),
  };
  int trials = 0;
  while (trials < 50) {
    const AffineStructure& structure = structures[trials % structures.size()];
    const int K = structure.size();
    Index n = 2 + Index(trials % 3);  // 2..4
    FullModel model = test::random_model(structure, 5, 1, 1, rng);
    auto pts = test::random_points(int(n) * K, rng);
    if (!test::well_conditioned(model, pts)) continue;

    std::vector<std::vector<Complex>> lg = {{pts.begin(), pts.begin() + n}};
    std::vector<std::vector<Complex>> rg;
    for (int q = 1; q < K; ++q)
      rg.push_back(std::vector<Complex>(pts.begin() + q * n,
                                        pts.begin() + (q + 1) * n));
    RealizationOracle oracle(model);
    GroupedData groups = sample_groups(oracle, lg, rg);
    PMatrixSet pset = choose_p_siso(groups);

    SolveOptions haar_opts, kron_opts;
    haar_opts.path = SolveOptions::Path::Haar;
    kron_opts.path = SolveOptions::Path::Kronecker;
    StructuredRealization rh =
        solve_additional_points(groups, structure, pset, haar_opts);
    StructuredRealization rk =
        solve_additional_points(groups, structure, pset, kron_opts);
    for (int k = 0; k < K; ++k) {
      double scale = rk.A(k).cwiseAbs().maxCoeff();
      CHECK((rh.A(k) - rk.A(k)).cwiseAbs().maxCoeff() <= 1e-10 * (1 + scale));
    }
    ++trials;
  }
}

TEST_CASE("Haar condition violation is reported with the entry") {
  // h = (s^2, 1) with left point 1 and right point -1 gives identical rows.
  AffineStructure structure({monomial(2), monomial(0)});
  GroupedData g;
  g.m = g.p = 1;
  g.group_size = 1;
  g.left_groups = {{left(1.0, 1.0, 0.5)}};
  g.right_groups = {{right(-1.0, 1.0, 0.5)}};
  PMatrixSet pset = choose_p_siso(g);
  CHECK_THROWS_AS(solve_additional_points(g, structure, pset),
                  HaarViolationError);
}

TEST_CASE("additional-points real variant") {
  FullModel model = delay_toeplitz_model(40, 5.0, 0.01, 1.0);
  RealizationOracle oracle(model);
  SampleRequest req;
  auto omegas = test::logspace(1.0, 100.0, 6);
  for (int t = 0; t < 6; ++t) {
    Complex s(0.0, omegas[t]);
    auto& side = (t % 3 == 0) ? req.left_points : req.right_points;
    side.push_back(s);
    side.push_back(std::conj(s));
  }
  InterpolationData pool = tangential_sample(oracle, req);

  RealizeOptions copts;
  copts.method = RealizeOptions::Method::Additional;
  StructuredRealization complex_r = realize(pool, model.structure(), copts);

  RealizeOptions ropts = copts;
  ropts.make_real = true;
  StructuredRealization real_r = realize(pool, model.structure(), ropts);

  CHECK(real_r.is_real());
  double scale = 0.0;
  for (int k = 0; k < 3; ++k)
    scale = std::max(scale, real_r.A(k).cwiseAbs().maxCoeff());
  for (int k = 0; k < 3; ++k)
    CHECK(real_r.A(k).imag().cwiseAbs().maxCoeff() <= 1e-10 * scale);
  for (double w : test::logspace(1.0, 100.0, 60)) {
    Complex s(0, w);
    CHECK(rel_diff(real_r.transfer(s), complex_r.transfer(s)) < 1e-10);
  }

  // The Kronecker route with transformed coefficient blocks agrees too.
  GroupedData groups = partition_groups(pool, 1, 2, true);
  PMatrixSet pset = choose_p_siso(groups);
  SolveOptions sopts;
  sopts.make_real = true;
  sopts.path = SolveOptions::Path::Kronecker;
  StructuredRealization real_kron =
      solve_additional_points(groups, model.structure(), pset, sopts);
  CHECK(real_kron.is_real());
  for (double w : test::logspace(1.0, 100.0, 30)) {
    Complex s(0, w);
    CHECK(rel_diff(real_kron.transfer(s), complex_r.transfer(s)) < 1e-9);
  }
}

TEST_CASE("Hermite solver matches values and derivatives, K = 4") {
  std::mt19937_64 rng(207);
  AffineStructure structure(
      {monomial(2), monomial(1), monomial(0), exponential(1.0)});
  FullModel model = test::random_model(structure, 6, 1, 1, rng);
  RealizationOracle oracle(model);

  SampleRequest req;
  auto pts = test::random_points(6, rng);
  req.left_points.assign(pts.begin(), pts.begin() + 3);
  req.right_points.assign(pts.begin() + 3, pts.end());
  req.want_hermite = true;
  InterpolationData data = tangential_sample(oracle, req);

  PMatrixSet pset = choose_p_siso_hermite(data, HermiteSide::Both);
  StructuredRealization r =
      solve_hermite(data, structure, pset, HermiteSide::Both);
  ResidualReport rep = interpolation_residuals(r, data);
  CHECK(rep.left < 1e-8);
  CHECK(rep.right < 1e-8);
  CHECK(rep.left_deriv < 1e-8);
  CHECK(rep.right_deriv < 1e-8);
}

TEST_CASE("one-sided Hermite on the toy delay model, K = 3") {
  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  RealizationOracle oracle(toy.model);
  SampleRequest req;
  req.left_points = {Complex(0, 0.5), Complex(0.4, 1.2)};
  req.right_points = {Complex(0, 1.7), Complex(0.8, -0.6)};
  req.want_hermite = true;
  InterpolationData data = tangential_sample(oracle, req);

  PMatrixSet pset = choose_p_siso_hermite(data, HermiteSide::Left);
  StructuredRealization r =
      solve_hermite(data, toy.model.structure(), pset, HermiteSide::Left);

  // Oracle for H': finite differences on the analytic transfer function.
  for (const auto& s : data.left) {
    double h = 1e-6 * std::max(1.0, std::abs(s.mu));
    Complex fd = (oracle.eval(s.mu + h)(0, 0) - oracle.eval(s.mu - h)(0, 0)) /
                 (2.0 * h);
    CHECK(rel_diff(r.transfer_derivative(s.mu)(0, 0), fd) < 1e-6);
  }
  ResidualReport rep = interpolation_residuals(r, data);
  CHECK(rep.left < 1e-9);
  CHECK(rep.right < 1e-9);
  CHECK(rep.left_deriv < 1e-8);

  SUBCASE("missing derivative data") {
    InterpolationData no_deriv = data;
    no_deriv.f_prime.clear();
    no_deriv.g_prime.clear();
    CHECK_THROWS_AS(choose_p_siso_hermite(no_deriv, HermiteSide::Left),
                    MissingHermiteDataError);
  }

  SUBCASE("wrong K for two-sided") {
    PMatrixSet pboth = choose_p_siso_hermite(data, HermiteSide::Both);
    CHECK_THROWS_AS(
        solve_hermite(data, toy.model.structure(), pboth, HermiteSide::Both),
        DataError);
  }
}

TEST_CASE("Hermite real variant, K = 4") {
  std::mt19937_64 rng(411);
  AffineStructure structure(
      {monomial(2), monomial(1), monomial(0), exponential(1.0)});
  FullModel model = test::random_model(structure, 6, 1, 1, rng);
  RealizationOracle oracle(model);

  SampleRequest req;
  for (double w : {0.6, 1.4, 2.3}) {
    req.left_points.push_back(Complex(0, w));
    req.left_points.push_back(Complex(0, -w));
  }
  for (double w : {0.9, 1.8, 3.1}) {
    req.right_points.push_back(Complex(0, w));
    req.right_points.push_back(Complex(0, -w));
  }
  req.want_hermite = true;
  InterpolationData data = tangential_sample(oracle, req);

  RealizeOptions opts;
  opts.method = RealizeOptions::Method::Hermite;
  StructuredRealization complex_r = realize(data, structure, opts);
  opts.make_real = true;
  StructuredRealization real_r = realize(data, structure, opts);

  CHECK(real_r.is_real());
  for (double w : test::logspace(0.3, 5.0, 40)) {
    Complex s(0, w);
    CHECK(rel_diff(real_r.transfer(s), complex_r.transfer(s)) < 1e-9);
  }
  ResidualReport rep = interpolation_residuals(real_r, data);
  CHECK(rep.worst() < 1e-8);
}

TEST_CASE("rank truncation") {
  SUBCASE("oversampled toy delay collapses to order one") {
    const double cb = 1.0;
    auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
    RealizationOracle oracle(toy.model);
    std::vector<std::vector<Complex>> lg(1), rg(2);
    auto omegas = test::logspace(0.2, 3.0, 15);
    for (int i = 0; i < 5; ++i) {
      lg[0].push_back(Complex(0.1, omegas[3 * i]));
      rg[0].push_back(Complex(0.2, omegas[3 * i + 1]));
      rg[1].push_back(Complex(0.3, omegas[3 * i + 2]));
    }
    GroupedData groups = sample_groups(oracle, lg, rg);
    PMatrixSet pset = choose_p_siso(groups);
    StructuredRealization r =
        solve_additional_points(groups, toy.model.structure(), pset);

    // The paper's oversampled structure: constant matrices a_k / (c b).
    const double expected[3] = {1.0, -2.0, 0.5};
    for (int k = 0; k < 3; ++k) {
      Matrix constant =
          Matrix::Constant(5, 5, Complex(expected[k] / cb));
      CHECK((r.A(k) - constant).cwiseAbs().maxCoeff() < 1e-8);
    }

    std::vector<Complex> pts;
    for (const auto& g : lg) pts.insert(pts.end(), g.begin(), g.end());
    for (const auto& g : rg) pts.insert(pts.end(), g.begin(), g.end());
    InterpolationData flat;
    flat.left = groups.left_groups[0];
    flat.right = groups.right_groups[0];
    flat.right.insert(flat.right.end(), groups.right_groups[1].begin(),
                      groups.right_groups[1].end());
    StructuredRealization rr = rank_truncate(r, 1e-8, pts, &flat);
    CHECK(rr.order() == 1);
    std::mt19937_64 rng(5);
    for (Complex s : test::random_points(20, rng))
      CHECK(rel_diff(rr.transfer(s)(0, 0), oracle.eval(s)(0, 0)) < 1e-8);
  }

  SUBCASE("full-rank realizations are returned unchanged") {
    auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
    StructuredRealization rr = rank_truncate(toy.model);
    CHECK(rr.order() == toy.model.order());
    CHECK((rr.A(0) - toy.model.A(0)).norm() == 0.0);
  }

  SUBCASE("horizontal/vertical rank mismatch") {
    AffineStructure structure({monomial(1), monomial(0, -1.0)});
    Matrix A1 = Matrix::Zero(2, 2), A2 = Matrix::Zero(2, 2);
    A1(0, 1) = 1.0;  // column space e1, row space e2
    A2(0, 0) = 1.0;  // column space e1, row space e1
    Matrix B = Matrix::Ones(2, 1), C = Matrix::Ones(1, 2);
    StructuredRealization r(structure, {A1, A2}, B, C);
    CHECK_THROWS_AS(rank_truncate(r), RankMismatchError);
  }

  SUBCASE("kernel probe rank mismatch at a driving frequency") {
    AffineStructure structure({monomial(1), monomial(0, -1.0)});
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    Matrix B = Matrix::Ones(2, 1), C = Matrix::Ones(1, 2);
    StructuredRealization r(structure, {A, A}, B, C);
    // K(s) = (s - 1) A vanishes entirely at s = 1.
    std::vector<Complex> probes = {Complex(1.0, 0.0)};
    CHECK_THROWS_AS(rank_truncate(r, 1e-10, probes), RankMismatchError);
  }
}

TEST_CASE("scaling all samples scales the transfer function") {
  std::mt19937_64 rng(77);
  const Complex c(1.7, -0.9);

  SUBCASE("k2 path") {
    auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
    RealizationOracle oracle(toy.model);
    AffineStructure structure({monomial(1), exponential(1.0, -1.0)});
    SampleRequest req;
    auto pts = test::random_points(6, rng);
    req.left_points.assign(pts.begin(), pts.begin() + 3);
    req.right_points.assign(pts.begin() + 3, pts.end());
    InterpolationData data = tangential_sample(oracle, req);
    InterpolationData scaled = data;
    for (auto& s : scaled.left) s.f *= c;
    for (auto& s : scaled.right) s.g *= c;

    StructuredRealization r1 = k2_realization(data, structure);
    StructuredRealization r2 = k2_realization(scaled, structure);
    for (Complex s : test::random_points(10, rng))
      CHECK(rel_diff(r2.transfer(s)(0, 0), c * r1.transfer(s)(0, 0)) < 1e-10);
  }

  SUBCASE("SISO additional-points path") {
    auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
    RealizationOracle oracle(toy.model);
    GroupedData groups = sample_groups(
        oracle, {{Complex(0, 0.5), 0.8}},
        {{Complex(0, 1.2), 1.5}, {Complex(0, 2.0), 2.5}});
    GroupedData scaled = groups;
    for (auto& g : scaled.left_groups)
      for (auto& s : g) s.f *= c;
    for (auto& g : scaled.right_groups)
      for (auto& s : g) s.g *= c;

    StructuredRealization r1 = solve_additional_points(
        groups, toy.model.structure(), choose_p_siso(groups));
    StructuredRealization r2 = solve_additional_points(
        scaled, toy.model.structure(), choose_p_siso(scaled));
    for (Complex s : test::random_points(10, rng))
      CHECK(rel_diff(r2.transfer(s)(0, 0), c * r1.transfer(s)(0, 0)) < 1e-10);
  }

  SUBCASE("SISO Hermite path") {
    auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
    RealizationOracle oracle(toy.model);
    SampleRequest req;
    auto pts = test::random_points(4, rng);
    req.left_points.assign(pts.begin(), pts.begin() + 2);
    req.right_points.assign(pts.begin() + 2, pts.end());
    req.want_hermite = true;
    InterpolationData data = tangential_sample(oracle, req);
    InterpolationData scaled = data;
    for (auto& s : scaled.left) s.f *= c;
    for (auto& s : scaled.right) s.g *= c;
    for (auto& v : scaled.f_prime) v *= c;
    for (auto& v : scaled.g_prime) v *= c;

    auto solve = [&](const InterpolationData& d) {
      PMatrixSet pset = choose_p_siso_hermite(d, HermiteSide::Left);
      return solve_hermite(d, toy.model.structure(), pset, HermiteSide::Left);
    };
    StructuredRealization r1 = solve(data);
    StructuredRealization r2 = solve(scaled);
    for (Complex s : test::random_points(10, rng))
      CHECK(rel_diff(r2.transfer(s)(0, 0), c * r1.transfer(s)(0, 0)) < 1e-9);
  }
}

TEST_CASE("realize dispatch and stage tagging") {
  auto toy = toy_delay(1.0, -2.0, 0.5, 1.0, 1.0);
  RealizationOracle oracle(toy.model);

  SUBCASE("K = 2 routes to the pencil path") {
    AffineStructure structure({monomial(1), exponential(1.0, -1.0)});
    SampleRequest req;
    req.left_points = {Complex(0, 0.5), 0.8};
    req.right_points = {Complex(0, 1.2), 1.9};
    InterpolationData data = tangential_sample(oracle, req);
    StructuredRealization direct = k2_realization(data, structure);
    StructuredRealization via = realize(data, structure);
    for (double w : test::logspace(0.2, 4.0, 20)) {
      Complex s(0, w);
      CHECK(rel_diff(via.transfer(s), direct.transfer(s)) < 1e-13);
    }
  }

  SUBCASE("derivative data routes to Hermite") {
    SampleRequest req;
    req.left_points = {Complex(0, 0.5), 0.8};
    req.right_points = {Complex(0, 1.2), 1.9};
    req.want_hermite = true;
    InterpolationData data = tangential_sample(oracle, req);
    StructuredRealization r = realize(data, toy.model.structure());
    ResidualReport rep = interpolation_residuals(r, data);
    CHECK(rep.left_deriv < 1e-8);  // Hermite path matched derivatives
  }

  SUBCASE("partition stage is tagged") {
    SampleRequest req;
    req.left_points = {Complex(0, 0.5), 0.8};
    req.right_points = {Complex(0, 1.2), 1.9, 2.8};  // 2 + 3 cannot split 1+2
    InterpolationData data = tangential_sample(oracle, req);
    RealizeOptions opts;
    opts.method = RealizeOptions::Method::Additional;
    try {
      realize(data, toy.model.structure(), opts);
      FAIL("expected SizeMismatchError");
    } catch (const SizeMismatchError& e) {
      CHECK(e.stage() == "partition");
      CHECK(e.describe().find("partition") != std::string::npos);
    }
  }
}
