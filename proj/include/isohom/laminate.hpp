// Exact homogenization of rank-one laminates of two isotropic phases.
//
// Fields of a laminate depend on x.n only. The corrector gradient is constant
// in each layer, of the form a_i (x) n, fixed by traction continuity across
// the interfaces and the zero mean of the jump:
//
//   L* = <L> - theta (1 - theta) (dL n)^T [(1 - theta) A1(n) + theta A2(n)]^-1 (dL n),
//
// with A_i(n) = mu_i I + (lambda_i + mu_i) n n^T the acoustic tensor and
// dL = L1 - L2. The same tensor follows from the partial inversion formula in
// the frame of the layers; both routes are provided.
#pragma once

#include <stdexcept>
#include <vector>

#include "isohom/tensor2d.hpp"

namespace isohom {

struct LaminateSpec {
  double theta{0.5};  // volume fraction of phase 1
  Vec2 normal{1.0, 0.0};
  IsotropicModuli phase1;
  IsotropicModuli phase2;

  // Throws std::invalid_argument unless 0 <= theta <= 1 and |normal| = 1 to 1e-12.
  void validate() const;
};

// The one-dimensional cell problem is ill-posed: the acoustic tensor of a
// phase present in the laminate, or of their mixture, is singular.
class LaminateError : public std::runtime_error {
 public:
  // phase is 1 or 2, or 0 for the volume-weighted mixture.
  LaminateError(int phase, const std::string& what) : std::runtime_error(what), phase_(phase) {}
  int phase() const { return phase_; }

 private:
  int phase_;
};

Mat2 acoustic_tensor(const IsotropicModuli& m, const Vec2& n);

// Corrector route in the laboratory frame.
Tensor4 laminate_homogenize(const LaminateSpec& spec);
// Partial inversion in the frame (n, t), rotated back.
Tensor4 laminate_homogenize_rotated(const LaminateSpec& spec);

struct FractionSample {
  double theta;
  Tensor4 lstar;
  EllipticityReport ellipticity;
};

// Oracle tensor and its rank-one analysis for every theta of the sweep.
std::vector<FractionSample> ellipticity_vs_fraction(const LaminateSpec& base, const std::vector<double>& thetas,
                                                    const RankOneOptions& opts = {});

}  // namespace isohom
