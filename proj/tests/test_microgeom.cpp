#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "isohom/microgeom.hpp"

using namespace isohom;

namespace {

const IsotropicModuli kPhase1{0, 1};
const IsotropicModuli kPhase2{-4, 3};

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("isohom_test_" + name);
}

}  // namespace

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(Microstructure(2, {0, 1, 1}, kPhase1, kPhase2), std::invalid_argument);
  CHECK_THROWS_AS(Microstructure(2, {0, 1, 2, 0}, kPhase1, kPhase2), std::invalid_argument);
  CHECK_THROWS_AS(Microstructure(0, {}, kPhase1, kPhase2), std::invalid_argument);
  CHECK_NOTHROW(Microstructure(2, {0, 1, 1, 0}, kPhase1, kPhase2));
}

TEST_CASE("index arithmetic wraps") {
  const Microstructure m(3, {1, 0, 0, 0, 0, 0, 0, 0, 0}, kPhase1, kPhase2);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(3, 3) == 1);
  CHECK(m.at(-3, 6) == 1);
  CHECK(m.at(-1, 0) == 0);
}

TEST_CASE("laminate generator") {
  const auto m = laminate(8, 0.5, 1, kPhase1, kPhase2);
  CHECK(m.volume_fraction() == 0.5);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) CHECK(m.at(r, c) == (c < 4 ? 1 : 0));
  const auto h = laminate(8, 0.5, 2, kPhase1, kPhase2);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) CHECK(h.at(r, c) == (r < 4 ? 1 : 0));
  // round(0.3125 * 8) = round(2.5) = 3.
  CHECK(laminate(8, 0.3125, 1, kPhase1, kPhase2).phase1_cells() == 24);
  CHECK(laminate(8, 0.0, 1, kPhase1, kPhase2).phase1_cells() == 0);
  CHECK(laminate(8, 1.0, 1, kPhase1, kPhase2).phase1_cells() == 64);
  CHECK_THROWS_AS(laminate(8, 1.5, 1, kPhase1, kPhase2), std::invalid_argument);
  CHECK_THROWS_AS(laminate(8, 0.5, 3, kPhase1, kPhase2), std::invalid_argument);
}

TEST_CASE("disk generator cell counts") {
  const auto d = disk(64, 0.3, {0.5, 0.5}, kPhase1, kPhase2);
  CHECK(d.phase1_cells() == 1160);
  CHECK(d.volume_fraction() == 0.283203125);
  CHECK(disk(128, 0.2, {0.5, 0.5}, kPhase1, kPhase2).volume_fraction() == 0.12548828125);
  CHECK(disk(128, 0.3, {0.5, 0.5}, kPhase1, kPhase2).volume_fraction() == 0.282470703125);
  CHECK(disk(128, 0.4, {0.5, 0.5}, kPhase1, kPhase2).volume_fraction() == 0.501953125);
  CHECK_THROWS_AS(disk(16, 0.5, {0.5, 0.5}, kPhase1, kPhase2), std::invalid_argument);
  CHECK_THROWS_AS(disk(16, 0.0, {0.5, 0.5}, kPhase1, kPhase2), std::invalid_argument);
  CHECK_THROWS_AS(disk(16, 0.2, {1.0, 0.5}, kPhase1, kPhase2), std::invalid_argument);
}

TEST_CASE("disk wraps around the torus") {
  const auto centered = disk(32, 0.25, {0.5, 0.5}, kPhase1, kPhase2);
  const auto corner = disk(32, 0.25, {0.0, 0.0}, kPhase1, kPhase2);
  CHECK(centered.phase1_cells() == corner.phase1_cells());
  CHECK(corner.shifted(16, 16) == centered);
}

TEST_CASE("shift, rotation and upsampling") {
  const Microstructure m(3, {1, 1, 0, 0, 1, 0, 0, 0, 0}, kPhase1, kPhase2);
  const auto s = m.shifted(1, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(s.at(r, c) == m.at(r - 1, c - 2));
  CHECK(m.shifted(3, -3) == m);

  const auto q = m.rotated90();
  CHECK(q.phase1_cells() == m.phase1_cells());
  CHECK(q.at(0, 0) == m.at(0, 0));
  CHECK_FALSE(q == m);
  CHECK(q.rotated90().rotated90().rotated90() == m);
  // Layers normal to e1 become layers normal to e2.
  const auto lam = laminate(8, 0.25, 1, kPhase1, kPhase2).rotated90();
  for (int r = 0; r < 8; ++r) CHECK(lam.at(r, 3) == lam.at(r, 0));
  CHECK(matrix_components(lam) == 1);

  const auto u = m.upsampled(2);
  CHECK(u.n() == 6);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) CHECK(u.at(r, c) == m.at(r / 2, c / 2));
  CHECK(u.volume_fraction() == m.volume_fraction());
}

TEST_CASE("phase means") {
  const auto m = laminate(4, 0.25, 1, {1, 1}, {2, 3});
  const Tensor4 v = m.voigt_mean();
  CHECK((v.mandel() - (0.25 * Tensor4::isotropic({1, 1}) + 0.75 * Tensor4::isotropic({2, 3})).mandel()).norm() <=
        1e-14);
  const Mat3 reuss_inv =
      0.25 * Tensor4::isotropic({1, 1}).mandel().inverse() + 0.75 * Tensor4::isotropic({2, 3}).mandel().inverse();
  CHECK((m.reuss_mean().mandel() - reuss_inv.inverse()).norm() <= 1e-13);
  CHECK_THROWS_AS(laminate(4, 0.5, 1, {-1, 1}, {2, 3}).reuss_mean(), std::domain_error);
  CHECK(m.stiffness_at(0, 0).mandel() == Tensor4::isotropic({1, 1}).mandel());
  CHECK(m.stiffness_at(0, 1).mandel() == Tensor4::isotropic({2, 3}).mandel());
}

TEST_CASE("phase conditions") {
  const auto c = check_phase_conditions(kPhase1, kPhase2);
  CHECK(c.all());
  CHECK_FALSE(check_phase_conditions({1, 1}, {2, 3}).shear_bulk_equality);
  CHECK_FALSE(check_phase_conditions({0, 3}, {-6, 3}).mu1_below_mu2);
  CHECK_FALSE(check_phase_conditions({-1, 1}, {-4, 3}).bulk1_positive);
  CHECK_FALSE(check_phase_conditions({1, 0}, {0, 0}).mu1_positive);
  // A perturbation well above roundoff breaks the equality.
  CHECK_FALSE(check_phase_conditions({0, 1}, {-4 + 1e-9, 3}).shear_bulk_equality);
  CHECK(check_phase_conditions({0, 1}, {-4 + 1e-14, 3}).shear_bulk_equality);
}

TEST_CASE("matrix connectivity") {
  CHECK(matrix_components(disk(32, 0.3, {0.5, 0.5}, kPhase1, kPhase2)) == 1);
  CHECK(matrix_components(laminate(16, 0.5, 1, kPhase1, kPhase2)) == 1);
  // Two slabs of inclusion split the matrix into two strips.
  std::vector<std::uint8_t> chi(64, 0);
  for (int r = 0; r < 8; ++r) {
    chi[r * 8 + 0] = 1;
    chi[r * 8 + 4] = 1;
  }
  const Microstructure two(8, chi, kPhase1, kPhase2);
  CHECK(matrix_components(two) == 2);
  const auto rep = check_admissibility(two);
  CHECK(rep.cond_eq3);
  CHECK_FALSE(rep.matrix_connected);
  CHECK_FALSE(rep.admissible());
  CHECK(matrix_components(homogeneous(4, kPhase1)) == 0);
  // Diagonal contact does not connect.
  const Microstructure diag(2, {0, 1, 1, 0}, kPhase1, kPhase2);
  CHECK(matrix_components(diag) == 2);
}

TEST_CASE("PGM round trip") {
  const auto m = disk(17, 0.27, {0.4, 0.55}, kPhase1, kPhase2);
  for (auto fmt : {PgmFormat::plain, PgmFormat::binary}) {
    const auto path = temp_file(fmt == PgmFormat::plain ? "p2.pgm" : "p5.pgm");
    to_raster(m, path, fmt);
    CHECK(from_raster(path, kPhase1, kPhase2) == m);
    std::filesystem::remove(path);
  }
}

TEST_CASE("PGM parsing") {
  int n = 0;
  {
    std::istringstream in("P2\n# comment\n2 2\n255\n0 255\n255 0\n");
    const auto chi = read_pgm_chi(in, n);
    CHECK(n == 2);
    CHECK(chi == std::vector<std::uint8_t>{0, 1, 1, 0});
  }
  {
    std::istringstream in("P2\n2 2\n255\n0 128\n255 0\n");
    CHECK_THROWS_AS(read_pgm_chi(in, n), RasterError);
  }
  {
    std::istringstream in("P2\n3 2\n1\n0 1 0\n1 0 1\n");
    CHECK_THROWS_AS(read_pgm_chi(in, n), RasterError);
  }
  {
    std::istringstream in("P3\n2 2\n1\n0 1 1 0\n");
    CHECK_THROWS_AS(read_pgm_chi(in, n), RasterError);
  }
  {
    std::istringstream in("P2\n2 2\n1\n0 1 1\n");
    CHECK_THROWS_AS(read_pgm_chi(in, n), RasterError);
  }
  CHECK_THROWS_AS(from_raster(temp_file("does_not_exist.pgm"), kPhase1, kPhase2), RasterError);
}

TEST_CASE("descriptor parsing") {
  nlohmann::ordered_json j = {{"n", 16},
                              {"generator", {{"kind", "disk"}, {"radius", 0.3}}},
                              {"phase1", {{"lambda", 0}, {"mu", 1}}},
                              {"phase2", {{"lambda", -4}, {"mu", 3}}}};
  CHECK(microstructure_from_json(j) == disk(16, 0.3, {0.5, 0.5}, kPhase1, kPhase2));

  j["generator"] = {{"kind", "laminate"}, {"theta", 0.25}, {"normal_axis", 2}};
  CHECK(microstructure_from_json(j) == laminate(16, 0.25, 2, kPhase1, kPhase2));

  j["generator"] = {{"kind", "laminate"}, {"theta", 0.25}, {"typo", 2}};
  CHECK_THROWS_AS(microstructure_from_json(j), std::invalid_argument);
  j["generator"] = {{"kind", "hexagon"}};
  CHECK_THROWS_AS(microstructure_from_json(j), std::invalid_argument);

  const auto dir = std::filesystem::temp_directory_path();
  const auto raster = disk(8, 0.3, {0.5, 0.5}, kPhase1, kPhase2);
  to_raster(raster, dir / "isohom_test_desc.pgm");
  j["generator"] = {{"kind", "raster"}, {"path", "isohom_test_desc.pgm"}};
  CHECK(microstructure_from_json(j, dir) == raster.upsampled(2));
  j["n"] = 12;
  CHECK_THROWS_AS(microstructure_from_json(j, dir), std::invalid_argument);
  std::filesystem::remove(dir / "isohom_test_desc.pgm");
}
