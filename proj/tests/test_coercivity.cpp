#include <doctest.h>

#include <cmath>

#include "isohom/coercivity.hpp"
#include "isohom/spectral.hpp"

using namespace isohom;

namespace {

const IsotropicModuli kPhase1{0, 1};
const IsotropicModuli kPhase2{-4, 3};

// Smallest generalized eigenvalue of the dense Bloch form.
double dense_smallest(const Microstructure& m, Vec2 kappa) {
  const spectral::BlochOperator op(m, kappa);
  const Eigen::Index N = op.size();
  Eigen::MatrixXcd A(N, N);
  for (Eigen::Index j = 0; j < N; ++j) A.col(j) = op.apply(spectral::CVector::Unit(N, j));
  A = 0.5 * (A + A.adjoint()).eval();
  const Eigen::VectorXd s = op.gram().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXcd C = s.asDiagonal() * A * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(C);
  return es.eigenvalues()(0);
}

}  // namespace

TEST_CASE("constant coefficients") {
  const auto r1 = lambda_per(homogeneous(8, {1, 1}), 16);
  CHECK(std::abs(r1.value - 1.0) <= 1e-8);
  CHECK(r1.residual <= 1e-8);
  const auto r2 = lambda_per(homogeneous(8, {-2, 1}), 16);
  CHECK(std::abs(r2.value) <= 1e-8);
  const auto r3 = lambda_per(homogeneous(8, kPhase2), 16);
  CHECK(std::abs(r3.value - 2.0) <= 1e-8);
}

TEST_CASE("Bloch quotient of a homogeneous medium does not depend on k") {
  const auto m = homogeneous(8, {1, 1});
  for (const Vec2& k : {Vec2(0.25, 0.0), Vec2(0.5, 0.5), Vec2(0.875, 0.375)}) {
    const auto s = bloch_quotient(m, 8, k);
    CHECK(std::abs(s.lambda_k - 1.0) <= 1e-8);
    CHECK(s.k == k);
  }
}

TEST_CASE("iterative and dense eigenvalues agree") {
  const auto m = disk(8, 0.3, {0.5, 0.5}, kPhase1, kPhase2);
  CHECK(std::abs(lambda_per(m, 8).value - dense_smallest(m, Vec2::Zero())) <= 1e-8);
  const Vec2 k(0.25, -0.125);
  CHECK(std::abs(bloch_quotient(m, 8, k).lambda_k - dense_smallest(m, k)) <= 1e-8);
  // Quasi-momenta differing by a lattice vector are equivalent.
  CHECK(std::abs(bloch_quotient(m, 8, Vec2(0.25, 0.875)).lambda_k - dense_smallest(m, k)) <= 1e-8);
}

TEST_CASE("canonical disk is periodically coercive") {
  const auto m = disk(32, 0.3, {0.5, 0.5}, kPhase1, kPhase2);
  const auto r = lambda_per(m, 32);
  CHECK(r.value > 1e-3);
  CHECK(r.value < 1.0);
  CHECK(r.iterations > 0);
}

TEST_CASE("Bloch sweep layout") {
  const auto m = disk(8, 0.3, {0.5, 0.5}, kPhase1, kPhase2);
  const auto s = bloch_sweep(m, 8, 3);
  REQUIRE(s.samples.size() == 9);
  CHECK(s.samples[1].k == Vec2(0.0, 1.0 / 3.0));
  CHECK(s.samples[3].k == Vec2(1.0 / 3.0, 0.0));
  double lo = 1e300;
  for (const auto& e : s.samples) lo = std::min(lo, e.lambda_k);
  CHECK(s.lambda_bloch_min == lo);
  CHECK(std::abs(s.samples[0].lambda_k - lambda_per(m, 8).value) <= 1e-8);
  CHECK_THROWS_AS(bloch_sweep(m, 8, 1), std::invalid_argument);
}

TEST_CASE("comparison certificate") {
  const auto c = comparison_certificate(disk(16, 0.3, {0.5, 0.5}, kPhase1, kPhase2));
  CHECK(c.comparison_psd);
  CHECK(c.underline_moduli == IsotropicModuli{-2, 1});
  CHECK(c.underline_rank_one_min == 0.0);
  CHECK(std::abs(c.min_gap_eigenvalue) <= 1e-14);

  const auto f = comparison_certificate(disk(16, 0.3, {0.5, 0.5}, {0, 1}, {-5, 3}));
  CHECK_FALSE(f.comparison_psd);

  // Only phases present in the raster enter the infimum.
  const auto h = comparison_certificate(homogeneous(8, {1, 1}).with_phases({1, 1}, {-9, 1}));
  CHECK(h.underline_moduli == IsotropicModuli{1, 1});
  CHECK(h.comparison_psd);
}

TEST_CASE("argument checks") {
  const auto m = disk(16, 0.3, {0.5, 0.5}, kPhase1, kPhase2);
  CHECK_THROWS_AS(lambda_per(m, 24), std::invalid_argument);
  CHECK_THROWS_AS(lambda_per(homogeneous(4, {1, 1}), 4), std::invalid_argument);
  EigenOptions o;
  o.eig_tol = 0.0;
  CHECK_THROWS_AS(lambda_per(m, 16, o), std::invalid_argument);
  o.eig_tol = 1e-12;
  o.max_iter = 1;
  CHECK_THROWS_AS(lambda_per(m, 16, o), EigenSolveError);
}

TEST_CASE("report JSON") {
  const auto r = assess_coercivity(disk(8, 0.3, {0.5, 0.5}, kPhase1, kPhase2), 8, 2);
  const auto j = to_json(r);
  CHECK(j["resolution"] == 8);
  CHECK(j["bloch_samples"].size() == 4);
  CHECK(j["lambda_bloch_min_kind"] == "upper_bound_estimate");
  CHECK(j["certificate"]["comparison_psd"] == true);
  const auto n = to_json(assess_coercivity(homogeneous(8, {1, 1}), 8, std::nullopt));
  CHECK_FALSE(n.contains("bloch_samples"));
}
