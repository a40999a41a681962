// Periodic two-phase microstructures on the unit torus.
//
// The characteristic function chi of phase 1 (the inclusion) is sampled at
// cell centers of an n x n raster. Entry (row, col) covers the cell whose
// center is ((col + 1/2)/n, (row + 1/2)/n); col runs along x1, row along x2.
// chi = 0 marks phase 2, the matrix. All index arithmetic wraps modulo n.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isohom/tensor2d.hpp"

namespace isohom {

class Microstructure {
 public:
  // Throws std::invalid_argument on a size mismatch or a value other than 0/1.
  Microstructure(int n, std::vector<std::uint8_t> chi, IsotropicModuli phase1, IsotropicModuli phase2);

  int n() const { return n_; }
  std::span<const std::uint8_t> chi() const { return chi_; }
  std::uint8_t at(int row, int col) const;
  const IsotropicModuli& phase1() const { return phase1_; }
  const IsotropicModuli& phase2() const { return phase2_; }

  double volume_fraction() const;
  std::size_t phase1_cells() const;

  Tensor4 stiffness_at(int row, int col) const;
  // Arithmetic mean theta L1 + (1 - theta) L2.
  Tensor4 voigt_mean() const;
  // Harmonic mean <L^-1>^-1; throws std::domain_error if a present phase is singular.
  Tensor4 reuss_mean() const;

  // Cyclic shift: result(row, col) = this(row - drow, col - dcol).
  Microstructure shifted(int drow, int dcol) const;
  // Rotation of the torus by +90 degrees about the center of cell (0, 0).
  Microstructure rotated90() const;
  // Each cell replaced by a factor x factor block; the continuum chi is unchanged.
  Microstructure upsampled(int factor) const;
  Microstructure with_phases(IsotropicModuli phase1, IsotropicModuli phase2) const;

  bool operator==(const Microstructure&) const = default;

 private:
  int n_;
  std::vector<std::uint8_t> chi_;
  IsotropicModuli phase1_;
  IsotropicModuli phase2_;
};

// Slab of phase 1 of width round(theta n)/n (half away from zero) covering the
// first cells along `normal_axis` (1: columns, layers normal to e1; 2: rows).
Microstructure laminate(int n, double theta, int normal_axis, IsotropicModuli phase1, IsotropicModuli phase2);

// Phase 1 wherever the torus distance from the cell center to `center` is
// below `radius`. Throws std::invalid_argument unless 0 < radius < 0.5.
Microstructure disk(int n, double radius, Vec2 center, IsotropicModuli phase1, IsotropicModuli phase2);

Microstructure homogeneous(int n, IsotropicModuli phase);

class RasterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PgmFormat { plain, binary };

// Reads a square P2/P5 image; 0 maps to phase 2 and maxval to phase 1.
// Throws RasterError on malformed headers, non-square images or any other gray value.
Microstructure from_raster(const std::filesystem::path& path, IsotropicModuli phase1, IsotropicModuli phase2);
std::vector<std::uint8_t> read_pgm_chi(std::istream& in, int& n);
// P2 is written with maxval 1, P5 with maxval 255.
void to_raster(const Microstructure& m, const std::filesystem::path& path, PgmFormat fmt = PgmFormat::plain);
void write_pgm(std::ostream& out, const Microstructure& m, PgmFormat fmt);

struct PhaseConditions {
  bool mu1_positive{false};
  bool shear_bulk_equality{false};  // mu1 = -(lambda2 + mu2)
  bool mu1_below_mu2{false};
  bool bulk1_positive{false};
  bool all() const { return mu1_positive && shear_bulk_equality && mu1_below_mu2 && bulk1_positive; }
};

PhaseConditions check_phase_conditions(const IsotropicModuli& phase1, const IsotropicModuli& phase2);

struct AdmissibilityReport {
  PhaseConditions phases;
  bool cond_eq3{false};
  bool matrix_connected{false};
  int matrix_components{0};
  double volume_fraction{0.0};
  bool admissible() const { return cond_eq3 && matrix_connected; }
};

// Number of 4-connected components of {chi = 0} on the torus.
int matrix_components(const Microstructure& m);
AdmissibilityReport check_admissibility(const Microstructure& m);

// Builds a microstructure from the JSON descriptor
//   {"n", "generator": {"kind": "laminate"|"disk"|"raster", ...}, "phase1", "phase2"}.
// Raster paths are resolved relative to base_dir.
Microstructure microstructure_from_json(const nlohmann::ordered_json& j,
                                        const std::filesystem::path& base_dir = {});
nlohmann::ordered_json to_json(const AdmissibilityReport& r);

}  // namespace isohom
