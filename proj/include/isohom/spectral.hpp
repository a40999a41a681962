// Fourier-Galerkin machinery shared by the cell solver and the coercivity
// estimates.
//
// At raster resolution n the trial space is spanned by the lattice
// frequencies k with |k1|, |k2| <= kmax = (n - 1)/2 (integer division); the
// Nyquist line of even n is excluded so that every retained mode has a
// well-defined real derivative.
//
// Products of the coefficient field with strains are formed on the
// cell-centered 2n x 2n grid, where each raster cell contributes four
// samples of its own phase. Retained strains have frequencies below kmax,
// so their pairwise products are trigonometric polynomials that this grid
// integrates without aliasing: the discrete energy is the exact Galerkin form
// of the two-phase coefficient sampled on the fine grid.
//
// The spectral frame has its origin at the first fine grid point, a quarter
// raster cell below and to the left of the center of cell (0, 0). Real-space
// samples returned on the n x n grid are shifted back to the cell centers.
//
// Operators own FFT plans and scratch buffers: one instance must not be used
// from several threads at once; distinct instances are independent.
#pragma once

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "isohom/microgeom.hpp"
#include "isohom/tensor2d.hpp"

namespace isohom::spectral {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 6.28318530717958647692;

inline int max_frequency(int n) { return (n - 1) / 2; }

struct Mode {
  int k1;
  int k2;
};

// Independent half of the retained lattice: k1 > 0, or k1 = 0 and k2 > 0,
// ordered by k1 then k2.
std::vector<Mode> half_lattice(int n);

// Two-phase coefficient on the fine 2n x 2n grid.
class CoefficientField {
 public:
  explicit CoefficientField(const Microstructure& m);

  int n() const { return n_; }
  int fine() const { return 2 * n_; }
  // Characteristic function of phase 1 on the fine grid, row-major.
  const std::vector<double>& chi() const { return chi_; }
  const Mat3& matrix_tensor() const { return l2_; }
  const Mat3& contrast() const { return dl_; }

  // sigma = (L2 + chi (L1 - L2)) eps at every fine grid point.
  void stress(const std::array<std::vector<double>, 3>& eps, std::array<std::vector<double>, 3>& sig) const;
  void stress(const std::array<std::vector<cplx>, 3>& eps, std::array<std::vector<cplx>, 3>& sig) const;

 private:
  int n_;
  std::vector<double> chi_;
  Mat3 l2_;
  Mat3 dl_;
};

// Default preconditioning reference: mu0 = (mu1 + mu2)/2, lambda0 + mu0 = max(K1, mu0).
IsotropicModuli default_reference(const Microstructure& m);

// Symmetric gradient symbol: eps_hat = 2 pi i S(k) v_hat with
// S(k) = [[k1, 0], [0, k2], [k2/sqrt2, k1/sqrt2]] in Mandel components.
Eigen::Matrix<double, 3, 2> strain_symbol(double k1, double k2);
// Inverse of the constant-coefficient operator of the reference medium at k.
Mat2 reference_inverse(const IsotropicModuli& ref, double k1, double k2);

struct FftPlans;

// Periodic elasticity form on real-valued, mean-zero fields.
//
// Unknowns are the Fourier coefficients of the independent half of the
// retained lattice (k1 > 0, or k1 = 0 and k2 > 0), two components per mode,
// interleaved. The real inner product <u, v> = 2 Re(u^H v) equals the L2
// product of the corresponding real fields.
class PeriodicOperator {
 public:
  PeriodicOperator(const Microstructure& m, IsotropicModuli reference);
  explicit PeriodicOperator(const Microstructure& m) : PeriodicOperator(m, default_reference(m)) {}
  ~PeriodicOperator();
  PeriodicOperator(const PeriodicOperator&) = delete;
  PeriodicOperator& operator=(const PeriodicOperator&) = delete;

  int n() const { return coeff_.n(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(2 * modes_.size()); }
  std::span<const Mode> modes() const { return modes_; }
  const CoefficientField& coefficients() const { return coeff_; }

  // Gradient of the energy E(v) = int (M + eps(v)) . L (M + eps(v)) / 2,
  // i.e. A v + b(M), where M is given as a Mandel vector.
  CVector gradient(const CVector& v, const Mandel3& loading) const;
  CVector apply(const CVector& v) const { return gradient(v, Mandel3::Zero()); }
  CVector precondition(const CVector& r) const;
  static double inner(const CVector& u, const CVector& v) { return 2.0 * u.dot(v).real(); }

  // int (M + eps(v)) . L (M + eps(v)) dx for the fine-grid coefficient.
  double energy(const CVector& v, const Mandel3& loading) const;
  // int (Mi + eps(vi)) . L (Mj + eps(vj)) dx for the fine-grid coefficient.
  double bilinear(const CVector& vi, const Mandel3& mi, const CVector& vj, const Mandel3& mj) const;

  // Total strain M + eps(v) on the fine grid.
  void total_strain(const CVector& v, const Mandel3& loading, std::array<std::vector<double>, 3>& eps) const;

 private:
  CVector project(std::array<std::vector<double>, 3>& sig) const;

  CoefficientField coeff_;
  IsotropicModuli reference_;
  std::vector<Mode> modes_;
  std::vector<std::size_t> index_;   // half-spectrum index on the fine grid
  std::vector<std::size_t> mirror_;  // index of -k for k1 = 0 modes
  std::unique_ptr<FftPlans> fft_;
  mutable std::array<std::vector<double>, 3> eps_;
  mutable std::array<std::vector<double>, 3> sig_;
};

// Quasi-periodic form for fields exp(2 pi i kappa.x) w(x) with w periodic and
// complex; all retained modes q are unknowns, except q = 0 when kappa = 0.
// Inner products are Hermitian: <u, v> = u^H v.
class BlochOperator {
 public:
  BlochOperator(const Microstructure& m, Vec2 kappa, IsotropicModuli reference);
  BlochOperator(const Microstructure& m, Vec2 kappa) : BlochOperator(m, kappa, default_reference(m)) {}
  ~BlochOperator();
  BlochOperator(const BlochOperator&) = delete;
  BlochOperator& operator=(const BlochOperator&) = delete;

  int n() const { return coeff_.n(); }
  const Vec2& kappa() const { return kappa_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(2 * modes_.size()); }
  std::span<const Mode> modes() const { return modes_; }

  CVector apply(const CVector& w) const;
  CVector precondition(const CVector& r) const;
  // Diagonal of the gradient Gram form B: (2 pi)^2 |q + kappa|^2 per component.
  const Eigen::VectorXd& gram() const { return gram_; }

 private:
  CoefficientField coeff_;
  Vec2 kappa_;
  IsotropicModuli reference_;
  std::vector<Mode> modes_;
  std::vector<std::size_t> index_;
  Eigen::VectorXd gram_;
  std::unique_ptr<FftPlans> fft_;
  mutable std::array<std::vector<cplx>, 3> eps_;
  mutable std::array<std::vector<cplx>, 3> sig_;
};

// Spectral gradient G(i, j) = d v_i / d x_j on the n x n grid of a periodic
// field sampled there; frequencies beyond kmax are discarded first.
std::vector<Mat2> periodic_gradient(int n, std::span<const double> v1, std::span<const double> v2);

// Real-space samples at the n x n cell centers of the field described by
// coefficients on the independent half lattice (layout of PeriodicOperator),
// component c.
std::vector<double> synthesize(int n, std::span<const Mode> modes, const CVector& coeffs, int component);

}  // namespace isohom::spectral
