// Coercivity of the heterogeneous elastic energy.
//
// lambda_per is the smallest Rayleigh quotient
//     int grad v . L grad v / int |grad v|^2
// over mean-zero periodic fields in the Fourier-Galerkin space; a Bloch
// sweep samples the same quotient for quasi-periodic fields, whose minimum
// over the sampled quasi-momenta bounds the whole-space constant from above.
// The comparison certificate bounds it from below: when L - L_ is positive
// semidefinite everywhere for a constant strongly elliptic L_, the whole-space
// constant is non-negative.
#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "isohom/microgeom.hpp"
#include "isohom/tensor2d.hpp"

namespace isohom {

class EigenSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigenOptions {
  // Absolute tolerance on the eigenvalue change and on the B^-1 residual norm.
  double eig_tol{1e-8};
  int max_iter{1000};
  int block_size{4};
  std::optional<IsotropicModuli> reference;
};

struct EigenResult {
  double value{0.0};
  double residual{0.0};
  int iterations{0};
};

// Smallest generalized eigenvalue of A v = L B v for mean-zero periodic
// fields at resolution n. n must be a multiple of m.n(); the raster is
// replicated, which leaves the continuum microstructure unchanged.
// Throws EigenSolveError when the iteration budget runs out.
EigenResult lambda_per(const Microstructure& m, int n, const EigenOptions& opts = {});

struct BlochSample {
  Vec2 k;
  double lambda_k{0.0};
  double residual{0.0};
  int iterations{0};
};

// Smallest quotient for the quasi-momentum k in [0,1)^2; k is reduced to
// [-1/2, 1/2)^2 before assembly so the frequency box stays centered.
BlochSample bloch_quotient(const Microstructure& m, int n, Vec2 k, const EigenOptions& opts = {});

struct BlochSweep {
  std::vector<BlochSample> samples;  // k-lexicographic order
  double lambda_bloch_min{0.0};
};

// Samples k = (i, j)/k_grid for 0 <= i, j < k_grid; k_grid >= 2.
BlochSweep bloch_sweep(const Microstructure& m, int n, int k_grid, const EigenOptions& opts = {});

struct ComparisonCertificate {
  bool comparison_psd{false};
  IsotropicModuli underline_moduli;
  // min(mu_, lambda_ + 2 mu_), the rank-one minimum of the comparison tensor.
  double underline_rank_one_min{0.0};
  // Smallest Mandel eigenvalue of L_i - L_ over the phases present.
  double min_gap_eigenvalue{0.0};
};

// mu_ = mu1 and lambda_ = inf_x (lambda + mu) - mu1, the infimum taken over
// phases present in the raster.
ComparisonCertificate comparison_certificate(const Microstructure& m);

struct CoercivityReport {
  int resolution{0};
  EigenResult lambda_per;
  std::optional<BlochSweep> bloch;
  ComparisonCertificate certificate;
};

CoercivityReport assess_coercivity(const Microstructure& m, int n, std::optional<int> k_grid,
                                   const EigenOptions& opts = {});

nlohmann::ordered_json to_json(const ComparisonCertificate& c);
nlohmann::ordered_json to_json(const CoercivityReport& r);

}  // namespace isohom
