#include "isohom/laminate.hpp"

#include <array>
#include <cmath>
#include <string>

namespace isohom {

void LaminateSpec::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("laminate: theta must lie in [0, 1]");
  if (!(std::abs(normal.norm() - 1.0) <= 1e-12)) throw std::invalid_argument("laminate: normal must be a unit vector");
}

Mat2 acoustic_tensor(const IsotropicModuli& m, const Vec2& n) {
  return m.mu * Mat2::Identity() + (m.lambda + m.mu) * n * n.transpose();
}

namespace {

// Endpoint and well-posedness checks shared by both routes; returns true
// with `out` set when the laminate is a single phase.
bool single_phase(const LaminateSpec& spec, Tensor4& out) {
  spec.validate();
  if (spec.theta == 0.0) {
    out = Tensor4::isotropic(spec.phase2);
    return true;
  }
  if (spec.theta == 1.0) {
    out = Tensor4::isotropic(spec.phase1);
    return true;
  }
  return false;
}

void require_invertible(const Mat2& A, double scale, int phase) {
  const Eigen::SelfAdjointEigenSolver<Mat2> es(A);
  const double smallest = es.eigenvalues().cwiseAbs().minCoeff();
  if (smallest <= 1e-12 * std::max(scale, 1e-300)) {
    const std::string who = phase == 0 ? "the volume-weighted mixture" : "phase " + std::to_string(phase);
    throw LaminateError(phase, "laminate: acoustic tensor of " + who +
                                   " is singular along the normal; the layered cell problem is ill-posed");
  }
}

void check_well_posed(const LaminateSpec& spec) {
  const Mat2 A1 = acoustic_tensor(spec.phase1, spec.normal);
  const Mat2 A2 = acoustic_tensor(spec.phase2, spec.normal);
  const double scale = std::max(A1.norm(), A2.norm());
  require_invertible(A1, scale, 1);
  require_invertible(A2, scale, 2);
  require_invertible((1.0 - spec.theta) * A1 + spec.theta * A2, scale, 0);
}

}  // namespace

Tensor4 laminate_homogenize(const LaminateSpec& spec) {
  Tensor4 out;
  if (single_phase(spec, out)) return out;
  check_well_posed(spec);

  const double t1 = spec.theta, t2 = 1.0 - spec.theta;
  const Tensor4 L1 = Tensor4::isotropic(spec.phase1), L2 = Tensor4::isotropic(spec.phase2);
  const Tensor4 mean = t1 * L1 + t2 * L2;
  const Tensor4 dL = L1 - L2;
  const Vec2& n = spec.normal;
  const Mat2 K = t2 * acoustic_tensor(spec.phase1, n) + t1 * acoustic_tensor(spec.phase2, n);
  const Mat2 Kinv = K.inverse();

  // Column j: L* acting on the j-th Mandel basis strain.
  Mat3 L;
  for (int j = 0; j < 3; ++j) {
    const Mat2 M = from_mandel(Mandel3::Unit(j));
    const Vec2 c = Kinv * (apply(dL, M) * n);
    const Mat2 jump = c * n.transpose();
    L.col(j) = mean.mandel().col(j) - t1 * t2 * dL.mandel() * mandel_vector(jump);
  }
  return Tensor4(0.5 * (L + L.transpose()));
}

Tensor4 laminate_homogenize_rotated(const LaminateSpec& spec) {
  Tensor4 out;
  if (single_phase(spec, out)) return out;
  check_well_posed(spec);

  // In the layer frame the normal is e1: strains (eps_nn, sqrt2 eps_nt) jump
  // across interfaces and eps_tt is continuous; the conjugate stresses
  // (sig_nn, sqrt2 sig_nt) are continuous.
  const std::array<int, 2> nn{0, 2};
  const int tt = 1;
  using Mat21 = Eigen::Matrix<double, 2, 1>;
  using Mat12 = Eigen::Matrix<double, 1, 2>;

  const double w[2] = {spec.theta, 1.0 - spec.theta};
  const Mat3 L[2] = {Tensor4::isotropic(spec.phase1).mandel(), Tensor4::isotropic(spec.phase2).mandel()};
  Mat2 inv_nn = Mat2::Zero();
  Mat21 inv_nt = Mat21::Zero();  // <L_nn^-1 L_nt>
  Mat12 tn_inv = Mat12::Zero();  // <L_tn L_nn^-1>
  double schur = 0.0;            // <L_tt - L_tn L_nn^-1 L_nt>
  for (int p = 0; p < 2; ++p) {
    Mat2 Lnn;
    Mat21 Lnt;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) Lnn(a, b) = L[p](nn[a], nn[b]);
      Lnt(a) = L[p](nn[a], tt);
    }
    const Mat2 Linv = Lnn.inverse();
    inv_nn += w[p] * Linv;
    inv_nt += w[p] * Linv * Lnt;
    tn_inv += w[p] * Lnt.transpose() * Linv;
    schur += w[p] * (L[p](tt, tt) - (Lnt.transpose() * Linv * Lnt)(0, 0));
  }
  const Mat2 H = inv_nn.inverse();
  Mat3 S = Mat3::Zero();
  const Mat21 Hnt = H * inv_nt;
  const Mat12 tnH = tn_inv * H;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) S(nn[a], nn[b]) = H(a, b);
    S(nn[a], tt) = Hnt(a);
    S(tt, nn[a]) = tnH(a);
  }
  S(tt, tt) = schur + (tn_inv * H * inv_nt)(0, 0);

  const Tensor4 layer(0.5 * (S + S.transpose()));
  return layer.rotated(std::atan2(spec.normal(1), spec.normal(0)));
}

std::vector<FractionSample> ellipticity_vs_fraction(const LaminateSpec& base, const std::vector<double>& thetas,
                                                    const RankOneOptions& opts) {
  std::vector<FractionSample> out;
  out.reserve(thetas.size());
  for (double t : thetas) {
    LaminateSpec s = base;
    s.theta = t;
    const Tensor4 L = laminate_homogenize(s);
    out.push_back({t, L, rank_one_min(L, opts)});
  }
  return out;
}

}  // namespace isohom
