#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "isohom/laminate.hpp"

using namespace isohom;

namespace {

const IsotropicModuli kPhase1{0, 1};
const IsotropicModuli kPhase2{-4, 3};
const IsotropicModuli kSoft{1, 1};
const IsotropicModuli kStiff{2, 3};

Mat3 m3(std::initializer_list<double> v) {
  Mat3 m;
  auto it = v.begin();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = *it++;
  return m;
}

Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace

TEST_CASE("acoustic tensor") {
  const Mat2 A = acoustic_tensor({-4, 3}, {1, 0});
  CHECK(A == (Mat2() << 2, 0, 0, 3).finished());
  const Vec2 n = unit(0.7);
  CHECK((acoustic_tensor(kSoft, n) * n - 3.0 * n).norm() <= 1e-15);
}

TEST_CASE("very strongly elliptic laminate") {
  const Tensor4 L = laminate_homogenize({0.5, {1, 0}, kSoft, kStiff});
  const Mat3 expect = m3({4.363636363636363, 1.2727272727272725, 0, 1.2727272727272725, 5.454545454545455, 0, 0, 0, 3});
  CHECK((L.mandel() - expect).norm() <= 1e-13);
  CHECK(rank_one_min(L).min_value == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("canonical laminate loses ellipticity at one half") {
  const Tensor4 L = laminate_homogenize({0.5, {1, 0}, kPhase1, kPhase2});
  CHECK((L.mandel() - m3({2, -2, 0, -2, 0, 0, 0, 0, 3})).norm() <= 1e-13);
  const auto r = rank_one_min(L);
  CHECK(std::abs(r.min_value) <= 1e-8);
  CHECK(r.classification == Ellipticity::degenerate);
}

TEST_CASE("fraction sweep of the canonical laminate") {
  const std::vector<double> thetas{0.05, 0.125, 0.2, 0.25, 0.275, 0.5, 0.725, 0.95};
  const std::vector<double> expect{1.62, 1.125, 0.72, 0.5, 0.405, 0.0, 0.405, 0.9937888198757765};
  const auto s = ellipticity_vs_fraction({0.5, {1, 0}, kPhase1, kPhase2}, thetas);
  REQUIRE(s.size() == thetas.size());
  for (size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].theta == thetas[i]);
    CHECK(std::abs(s[i].ellipticity.min_value - expect[i]) <= 1e-9);
  }
}

TEST_CASE("oblique normal") {
  const Tensor4 L = laminate_homogenize({0.3, unit(0.3), kSoft, kStiff});
  const Mat3 expect = m3({5.3232775757828845, 1.5745344798676948, -6.0803712526377371e-04, 1.5745344798676948,
                          6.2476534644817239, -4.4656598738433961e-01, -6.0803712526377371e-04,
                          -4.4656598738433961e-01, 3.9657356264020582});
  CHECK((L.mandel() - expect).norm() <= 1e-12);
}

TEST_CASE("both routes agree") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_real_distribution<double> ang(-3.1, 3.1);
  for (int t = 0; t < 50; ++t) {
    const LaminateSpec s{u(rng), unit(ang(rng)), t % 2 ? kSoft : kPhase1, t % 2 ? kStiff : kPhase2};
    const Mat3 a = laminate_homogenize(s).mandel();
    const Mat3 b = laminate_homogenize_rotated(s).mandel();
    CHECK((a - b).norm() <= 1e-12 * a.norm());
  }
}

TEST_CASE("rotating the normal rotates the tensor") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ang(-3.1, 3.1);
  const LaminateSpec base{0.37, unit(0.2), kSoft, kStiff};
  const Tensor4 L0 = laminate_homogenize(base);
  for (int t = 0; t < 20; ++t) {
    const double phi = ang(rng);
    LaminateSpec s = base;
    s.normal = unit(0.2 + phi);
    const Mat3 lhs = laminate_homogenize(s).mandel();
    const Mat3 rhs = L0.rotated(phi).mandel();
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }
  // Flipping the normal leaves the laminate unchanged.
  LaminateSpec flip = base;
  flip.normal = -base.normal;
  CHECK((laminate_homogenize(flip).mandel() - L0.mandel()).norm() <= 1e-13);
}

TEST_CASE("sweep of very strongly elliptic phases stays positive") {
  std::vector<double> thetas;
  for (int i = 0; i <= 18; ++i) thetas.push_back(0.05 + 0.05 * i);
  const auto s = ellipticity_vs_fraction({0.5, {1, 0}, kSoft, kStiff}, thetas);
  CHECK(s.front().ellipticity.min_value == doctest::Approx(2.7272727272727).epsilon(1e-10));
  for (const auto& e : s) CHECK(e.ellipticity.classification == Ellipticity::strictly_strongly_elliptic);
}

TEST_CASE("endpoints return the phase tensors") {
  CHECK(laminate_homogenize({0.0, {1, 0}, kSoft, kStiff}).mandel() == Tensor4::isotropic(kStiff).mandel());
  CHECK(laminate_homogenize({1.0, {1, 0}, kSoft, kStiff}).mandel() == Tensor4::isotropic(kSoft).mandel());
  CHECK(laminate_homogenize_rotated({1.0, {0, 1}, kSoft, kStiff}).mandel() == Tensor4::isotropic(kSoft).mandel());
  // Near the endpoints the formula is continuous.
  const Mat3 near = laminate_homogenize({1e-9, {1, 0}, kSoft, kStiff}).mandel();
  CHECK((near - Tensor4::isotropic(kStiff).mandel()).norm() <= 1e-7);
}

TEST_CASE("homogeneous laminate") {
  const Mat3 L = laminate_homogenize({0.4, unit(1.1), kPhase2, kPhase2}).mandel();
  CHECK((L - Tensor4::isotropic(kPhase2).mandel()).norm() <= 1e-13);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(laminate_homogenize({1.2, {1, 0}, kSoft, kStiff}), std::invalid_argument);
  CHECK_THROWS_AS(laminate_homogenize({0.5, {1, 1}, kSoft, kStiff}), std::invalid_argument);
}

TEST_CASE("ill-posed layers are reported with the offending phase") {
  // lambda + 2 mu = 0: singular along the normal.
  try {
    laminate_homogenize({0.5, {1, 0}, {-2, 1}, kSoft});
    FAIL("expected LaminateError");
  } catch (const LaminateError& e) {
    CHECK(e.phase() == 1);
  }
  try {
    laminate_homogenize_rotated({0.5, {0, 1}, kSoft, {1, 0}});
    FAIL("expected LaminateError");
  } catch (const LaminateError& e) {
    CHECK(e.phase() == 2);
  }
  // Opposite-sign acoustic tensors whose mixture is singular.
  try {
    laminate_homogenize({0.5, {1, 0}, {1, 1}, {-5, -1}});
    FAIL("expected LaminateError");
  } catch (const LaminateError& e) {
    CHECK(e.phase() == 0);
  }
}
