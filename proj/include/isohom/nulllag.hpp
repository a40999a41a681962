// Null-Lagrangian rewrite of the two-phase energy density.
//
// Adding 4 mu1 det G to the density of phase i splits it into a form in the
// diagonal gradient entries (a, b) = (G11, G22) and one in the off-diagonal
// entries (c, d) = (G12, G21):
//
//   energy(L_i, G) + 4 mu1 det G = P_i(a, b) + R_i(c, d),
//   P_i(a, b) = lambda_i (a + b)^2 + 2 mu_i (a^2 + b^2) + 4 mu1 a b,
//   R_i(c, d) = mu_i (c + d)^2 - 4 mu1 c d.
//
// Under the phase conditions these satisfy, with one constant alpha,
//   P_1 >= alpha (a + b)^2,  R_1 >= alpha (c - d)^2,
//   P_2 >= alpha (a - b)^2,  R_2 >= alpha (c^2 + d^2),
// and the largest such alpha is min(lambda1 + 2 mu1, mu1, mu2 - mu1).
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "isohom/microgeom.hpp"
#include "isohom/tensor2d.hpp"

namespace isohom {

struct PhaseForms {
  Mat2 P;  // quadratic form in (G11, G22)
  Mat2 R;  // quadratic form in (G12, G21)
};

struct DensityDecomposition {
  double mu1{0.0};
  std::array<PhaseForms, 2> phases;
  // Empty when the phase conditions fail; the bounds are specific to that regime.
  std::optional<double> alpha;
  // Same constant obtained from eigenvalue computations on P_i, R_i.
  std::optional<double> alpha_numeric;
  // The four directional constants, in the order of the bounds above.
  std::array<double, 4> directional{};
  // Unit null directions of P_1, R_1, P_2, R_2 (empty if definite).
  std::array<std::optional<Vec2>, 4> kernels;
};

DensityDecomposition decompose(const IsotropicModuli& phase1, const IsotropicModuli& phase2);

// P_i(a, b) + R_i(c, d) evaluated from the stored forms.
double split_density(const PhaseForms& f, const Mat2& G);

// Largest alpha with Q - alpha S positive semidefinite (S positive semidefinite, nonzero).
double largest_admissible_multiple(const Mat2& Q, const Mat2& S);

// Unit vector spanning the null space of a 2 x 2 symmetric form, if it has one,
// with the sign fixed so that the first nonzero component is positive.
std::optional<Vec2> null_direction(const Mat2& Q, double rel_tol = 1e-12);

// energy(L(x), G(x)) + 4 mu1 det G(x) at every raster cell, row-major.
std::vector<double> shifted_density(const Microstructure& m, const std::vector<Mat2>& G_field);
std::vector<double> unshifted_density(const Microstructure& m, const std::vector<Mat2>& G_field);
// Mean over the torus of a field sampled on the raster.
double torus_mean(const std::vector<double>& f);

nlohmann::ordered_json to_json(const DensityDecomposition& d);

}  // namespace isohom
