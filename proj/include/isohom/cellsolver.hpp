// Periodic cell problem: for a macroscopic strain M find the mean-zero
// periodic v minimizing int (M + grad v) . L(x) (M + grad v) dx, and assemble
// the homogenized tensor from the three corrector solves.
//
// The discrete problem is the Fourier-Galerkin restriction of the
// energy (see spectral.hpp), solved matrix-free by conjugate gradients
// preconditioned with the constant-coefficient operator of a reference medium.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "isohom/microgeom.hpp"
#include "isohom/spectral.hpp"
#include "isohom/tensor2d.hpp"

namespace isohom {

struct SolverOptions {
  double tol{1e-9};
  // 0 selects the default 10 n.
  int max_iter{0};
  std::optional<IsotropicModuli> reference;
};

enum class CgStatus { converged, indefinite, max_iter };

const char* to_string(CgStatus s);

// Fourier coefficients of a real, mean-zero periodic 2-vector field on the
// independent half lattice of resolution n. Coefficients at -k follow by
// conjugation; the k = 0 coefficient is zero by construction.
class CorrectorField {
 public:
  CorrectorField() = default;
  CorrectorField(int n, spectral::CVector coeffs);

  int n() const { return n_; }
  const spectral::CVector& coefficients() const { return coeffs_; }
  std::span<const spectral::Mode> modes() const { return modes_; }
  // Coefficient of component c at an arbitrary lattice frequency.
  spectral::cplx coefficient(int k1, int k2, int component) const;
  bool is_zero() const { return coeffs_.isZero(0.0); }

  // Samples on the n x n grid of the spectral frame.
  std::vector<double> real_space(int component) const;

 private:
  int n_{0};
  std::vector<spectral::Mode> modes_;
  spectral::CVector coeffs_;
};

struct CorrectorResult {
  CorrectorField field;
  int iterations{0};
  double relative_residual{0.0};
  CgStatus status{CgStatus::converged};
};

// Loading basis E11, E22, E12 = (e1(x)e2 + e2(x)e1)/2 as Mandel vectors.
std::array<Mandel3, 3> loading_basis();

CorrectorResult solve_corrector(const spectral::PeriodicOperator& op, const Mat2& M, const SolverOptions& opts);
CorrectorResult solve_corrector(const Microstructure& m, const Mat2& M, const SolverOptions& opts = {});

struct CellDiagnostics {
  std::array<int, 3> cg_iterations{};
  std::array<double, 3> relative_residual{};
  std::array<CgStatus, 3> status{CgStatus::converged, CgStatus::converged, CgStatus::converged};
  bool indefiniteness_detected{false};
  bool converged{true};
  // |G - G^T|_F / |G|_F of the Gram matrix before symmetrization.
  double asymmetry{0.0};
  IsotropicModuli reference;
  double tol{0.0};
  int max_iter{0};
};

struct CellSolution {
  int resolution{0};
  double theta{0.0};
  std::array<CorrectorField, 3> correctors;
  Tensor4 lstar;
  CellDiagnostics diagnostics;
};

// Runs the three corrector solves. CG failures are reported in the
// diagnostics; lstar is then assembled from the last iterates.
CellSolution homogenize(const Microstructure& m, const SolverOptions& opts = {});

// int (M + grad v) . L (M + grad v) dx in the discrete energy.
double energy_of(const Microstructure& m, const Mat2& M, const CorrectorField& v);

nlohmann::ordered_json to_json(const CellDiagnostics& d);
nlohmann::ordered_json to_json(const CellSolution& s);

// Binary dump: 8-byte magic "ISOHCOR1", n as little-endian uint64, then the
// n x n real-space samples row-major, components interleaved, as
// little-endian float64.
void write_corrector(const CorrectorField& v, const std::filesystem::path& path);
inline constexpr char kCorrectorMagic[9] = "ISOHCOR1";

}  // namespace isohom
