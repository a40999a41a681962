#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "isohom/cellsolver.hpp"
#include "isohom/laminate.hpp"
#include "isohom/spectral.hpp"

using namespace isohom;

namespace {

const IsotropicModuli kSoft{1, 1};
const IsotropicModuli kStiff{2, 3};

double rel(const Mat3& a, const Mat3& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("half lattice layout") {
  const auto modes = spectral::half_lattice(8);
  // kmax = 3: 3 modes on k1 = 0 plus 3 columns of 7.
  CHECK(modes.size() == 24);
  CHECK(modes.front().k1 == 0);
  CHECK(modes.front().k2 == 1);
  CHECK(modes.back().k1 == 3);
  CHECK(modes.back().k2 == 3);
  CHECK(spectral::max_frequency(8) == 3);
  CHECK(spectral::max_frequency(7) == 3);
}

TEST_CASE("corrector coefficient lookup respects conjugate symmetry") {
  const int n = 8;
  const auto modes = spectral::half_lattice(n);
  spectral::CVector c(2 * modes.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = spectral::cplx(0.1 * i, -0.05 * i);
  const CorrectorField v(n, c);
  for (size_t i = 0; i < modes.size(); ++i) {
    CHECK(v.coefficient(modes[i].k1, modes[i].k2, 0) == c(2 * i));
    CHECK(v.coefficient(-modes[i].k1, -modes[i].k2, 1) == std::conj(c(2 * i + 1)));
  }
  CHECK(v.coefficient(0, 0, 0) == 0.0);
  CHECK(v.coefficient(4, 0, 0) == 0.0);
  CHECK_THROWS_AS(CorrectorField(n, spectral::CVector::Zero(3)), std::invalid_argument);
}

TEST_CASE("synthesis places samples at cell centers") {
  const int n = 16;
  const auto modes = spectral::half_lattice(n);
  spectral::CVector c = spectral::CVector::Zero(2 * modes.size());
  // v1 = 2 Re(c exp(2 pi i (2 x1 + 1 x2))) in frame coordinates, where cell
  // centers sit at (col + 1/4)/n, (row + 1/4)/n.
  const spectral::cplx coeff(0.3, -0.7);
  for (size_t i = 0; i < modes.size(); ++i)
    if (modes[i].k1 == 2 && modes[i].k2 == 1) c(2 * i) = coeff;
  const auto u = spectral::synthesize(n, modes, c, 0);
  double err = 0.0;
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < n; ++col) {
      const double x1 = (col + 0.25) / n, x2 = (r + 0.25) / n;
      const double expect = 2.0 * (coeff * std::exp(spectral::cplx(0, spectral::kTwoPi * (2 * x1 + x2)))).real();
      err = std::max(err, std::abs(u[r * n + col] - expect));
    }
  CHECK(err <= 1e-13);
  for (double x : spectral::synthesize(n, modes, c, 1)) CHECK(x == doctest::Approx(0.0).scale(1e-14));
}

TEST_CASE("periodic gradient of a trigonometric field") {
  const int n = 16;
  std::vector<double> v1(n * n), v2(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double x1 = (c + 0.5) / n, x2 = (r + 0.5) / n;
      v1[r * n + c] = std::sin(spectral::kTwoPi * x1) * std::cos(2 * spectral::kTwoPi * x2);
      v2[r * n + c] = std::cos(3 * spectral::kTwoPi * x1);
    }
  const auto G = spectral::periodic_gradient(n, v1, v2);
  double err = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double x1 = (c + 0.5) / n, x2 = (r + 0.5) / n, w = spectral::kTwoPi;
      Mat2 e;
      e << w * std::cos(w * x1) * std::cos(2 * w * x2), -2 * w * std::sin(w * x1) * std::sin(2 * w * x2),
          -3 * w * std::sin(3 * w * x1), 0.0;
      err = std::max(err, (G[r * n + c] - e).norm());
    }
  CHECK(err <= 1e-11);
}

TEST_CASE("homogeneous media are reproduced exactly") {
  for (auto phase : {kSoft, IsotropicModuli{-2, 1}, IsotropicModuli{-4, 3}}) {
    const auto m = homogeneous(16, phase);
    const auto s = homogenize(m);
    const Mat3 L = Tensor4::isotropic(phase).mandel();
    CHECK((s.lstar.mandel() - L).norm() <= 1e-12 * L.norm());
    for (const auto& v : s.correctors) CHECK(v.is_zero());
    for (int it : s.diagnostics.cg_iterations) CHECK(it == 0);
    CHECK(s.diagnostics.converged);
  }
}

TEST_CASE("constant-coefficient energy equals the full-gradient energy") {
  const auto m = homogeneous(8, kSoft);
  CHECK(energy_of(m, Mat2::Identity(), CorrectorField(8, spectral::CVector::Zero(2 * 24))) ==
        doctest::Approx(8.0).epsilon(1e-13));
}

TEST_CASE("laminate of very strongly elliptic phases approaches the exact tensor") {
  const Tensor4 exact = laminate_homogenize({0.5, {1, 0}, kSoft, kStiff});
  const Mat3 expect = (Mat3() << 4.363636363636363, 1.2727272727272725, 0, 1.2727272727272725, 5.454545454545455,
                       0, 0, 0, 3)
                          .finished();
  CHECK((exact.mandel() - expect).norm() <= 1e-13);
  double prev = 1.0;
  for (int n : {16, 32, 64}) {
    const auto s = homogenize(laminate(n, 0.5, 1, kSoft, kStiff));
    CHECK(s.diagnostics.converged);
    const double e = rel(s.lstar.mandel(), exact.mandel());
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev <= 2e-2);
}

TEST_CASE("homogenized energy equals the corrector energy") {
  const auto m = disk(32, 0.3, {0.5, 0.5}, kSoft, kStiff);
  SolverOptions o;
  o.tol = 1e-11;
  const auto s = homogenize(m, o);
  const auto basis = loading_basis();
  for (int i = 0; i < 3; ++i) {
    const Mat2 M = from_mandel(basis[i]);
    const double direct = energy_of(m, M, s.correctors[i]);
    const double quad = basis[i].dot(s.lstar.mandel() * basis[i]);
    CHECK(std::abs(direct - quad) <= 1e-9 * std::abs(quad));
  }
  // The minimizer beats any perturbation.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const Mat2 M = from_mandel(basis[0]);
  const double e0 = energy_of(m, M, s.correctors[0]);
  for (int t = 0; t < 5; ++t) {
    spectral::CVector c = s.correctors[0].coefficients();
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) += 1e-3 * spectral::cplx(g(rng), g(rng));
    CHECK(energy_of(m, M, CorrectorField(32, c)) > e0);
  }
}

TEST_CASE("homogenized tensor lies between the Reuss and Voigt means") {
  const auto m = disk(32, 0.3, {0.5, 0.5}, kSoft, kStiff);
  const auto s = homogenize(m);
  CHECK(is_psd(m.voigt_mean() - s.lstar, 1e-10));
  CHECK(is_psd(s.lstar - m.reuss_mean(), 1e-10));
  CHECK(s.diagnostics.asymmetry <= 1e-8);
}

TEST_CASE("translation and rotation of the raster") {
  const auto m = disk(32, 0.27, {0.41, 0.57}, kSoft, kStiff);
  SolverOptions o;
  o.tol = 1e-12;
  const Mat3 L = homogenize(m, o).lstar.mandel();
  CHECK(rel(homogenize(m.shifted(5, -11), o).lstar.mandel(), L) <= 1e-8);
  const Mat3 Lr = homogenize(m.rotated90(), o).lstar.mandel();
  CHECK(rel(Lr, Tensor4(L).rotated(std::numbers::pi / 2).mandel()) <= 1e-8);
}

TEST_CASE("nested resolutions decrease the homogenized energy") {
  const auto base = disk(16, 0.3, {0.5, 0.5}, kSoft, kStiff);
  Mat3 prev = homogenize(base).lstar.mandel();
  for (int f : {2, 4}) {
    const Mat3 next = homogenize(base.upsampled(f)).lstar.mandel();
    Eigen::SelfAdjointEigenSolver<Mat3> es(prev - next);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    prev = next;
  }
}

TEST_CASE("indefiniteness and iteration budget are reported") {
  const auto bad = disk(16, 0.3, {0.5, 0.5}, {-8, 1}, kSoft);
  const auto s = homogenize(bad);
  CHECK(s.diagnostics.indefiniteness_detected);
  CHECK_FALSE(s.diagnostics.converged);

  SolverOptions o;
  o.max_iter = 2;
  o.tol = 1e-14;
  const auto t = homogenize(disk(32, 0.3, {0.5, 0.5}, kSoft, {20, 30}), o);
  CHECK_FALSE(t.diagnostics.converged);
  CHECK_FALSE(t.diagnostics.indefiniteness_detected);
  CHECK(t.diagnostics.status[0] == CgStatus::max_iter);
  CHECK(std::string(to_string(CgStatus::max_iter)) != to_string(CgStatus::indefinite));

  o.tol = 0.0;
  CHECK_THROWS_AS(homogenize(bad, o), std::invalid_argument);
}

TEST_CASE("corrector dump layout") {
  const auto m = disk(8, 0.3, {0.5, 0.5}, kSoft, kStiff);
  const auto s = homogenize(m);
  const auto path = std::filesystem::temp_directory_path() / "isohom_test_corrector.bin";
  write_corrector(s.correctors[0], path);
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 16 + 8 * 2 * 64);
  CHECK(std::string(bytes.data(), 8) == "ISOHCOR1");
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data() + 8, 8);
  CHECK(n == 8);
  const auto u1 = s.correctors[0].real_space(0);
  const auto u2 = s.correctors[0].real_space(1);
  double a = 0, b = 0;
  std::memcpy(&a, bytes.data() + 16 + 16 * 9, 8);
  std::memcpy(&b, bytes.data() + 16 + 16 * 9 + 8, 8);
  CHECK(a == u1[9]);
  CHECK(b == u2[9]);
  std::filesystem::remove(path);
}

TEST_CASE("solution JSON") {
  const auto s = homogenize(laminate(8, 0.5, 1, kSoft, kStiff));
  const auto j = to_json(s);
  CHECK(j["resolution"] == 8);
  CHECK(j["theta"] == 0.5);
  CHECK(j["diagnostics"]["status"][0] == "converged");
  CHECK(j["lstar"]["mandel"].size() == 9);
}
