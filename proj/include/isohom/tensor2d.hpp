// Fourth-order elasticity tensors in two dimensions.
//
// A tensor with minor and major symmetries acts on symmetric 2x2 matrices and
// is stored as a symmetric 3x3 matrix in the orthonormal Mandel basis
//
//     { e1(x)e1, e2(x)e2, (e1(x)e2 + e2(x)e1)/sqrt(2) }
//
// with component order (11, 22, 12). Shear rows and columns therefore carry a
// factor sqrt(2) relative to Voigt notation, and the Frobenius product of two
// symmetric matrices is the Euclidean product of their Mandel vectors.
#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace isohom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mandel3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kSqrt2 = 1.41421356237309504880;

// Lame pair of a 2D isotropic material. The bulk modulus is K = lambda + mu.
struct IsotropicModuli {
  double lambda{0.0};
  double mu{0.0};

  static IsotropicModuli from_bulk_shear(double bulk, double shear) {
    return {bulk - shear, shear};
  }

  double bulk() const { return lambda + mu; }
  // Positive on all symmetric matrices.
  bool very_strongly_elliptic() const { return mu > 0.0 && bulk() > 0.0; }
  // Bounded below on rank-one matrices: min(mu, lambda + 2 mu) > 0.
  bool strictly_strongly_elliptic() const { return mu > 0.0 && lambda + 2.0 * mu > 0.0; }

  IsotropicModuli scaled(double c) const { return {c * lambda, c * mu}; }
  bool operator==(const IsotropicModuli&) const = default;
};

// Mandel vector of sym(G).
Mandel3 mandel_vector(const Mat2& G);
// Symmetric matrix from its Mandel vector.
Mat2 from_mandel(const Mandel3& m);
Mat2 sym(const Mat2& G);

class Tensor4 {
 public:
  Tensor4() : mandel_(Mat3::Zero()) {}
  // Throws std::invalid_argument unless m is symmetric to 1e-12 relative.
  explicit Tensor4(const Mat3& m);

  static Tensor4 zero() { return Tensor4(); }
  static Tensor4 isotropic(const IsotropicModuli& m);

  const Mat3& mandel() const { return mandel_; }
  double operator()(int i, int j) const { return mandel_(i, j); }
  double norm() const { return mandel_.norm(); }

  // Component L_pqrs of the full index form, p,q,r,s in {0,1}.
  double component(int p, int q, int r, int s) const;

  // The tensor expressed in a frame rotated by `angle` (counterclockwise):
  // (R.L)(R e R^T) = R L(e) R^T.
  Tensor4 rotated(double angle) const;

  Tensor4 operator+(const Tensor4& o) const { return Tensor4(mandel_ + o.mandel_, Trusted{}); }
  Tensor4 operator-(const Tensor4& o) const { return Tensor4(mandel_ - o.mandel_, Trusted{}); }
  Tensor4 operator*(double c) const { return Tensor4(c * mandel_, Trusted{}); }
  friend Tensor4 operator*(double c, const Tensor4& t) { return t * c; }

 private:
  struct Trusted {};
  Tensor4(const Mat3& m, Trusted) : mandel_(m) {}
  Mat3 mandel_;
};

// Mandel matrix Q with mandel(R e R^T) = Q mandel(e) for the rotation by angle.
Mat3 mandel_rotation(double angle);

// L acting on a full gradient through its symmetric part.
Mat2 apply(const Tensor4& L, const Mat2& G);
double energy(const Tensor4& L, const Mat2& G);

struct RankOnePair {
  Vec2 a{1.0, 0.0};
  Vec2 b{1.0, 0.0};

  static RankOnePair from_angles(double angle_a, double angle_b);
  double angle_a() const;
  double angle_b() const;
  Mat2 matrix() const { return a * b.transpose(); }
};

enum class Ellipticity { strictly_strongly_elliptic, degenerate, not_strongly_elliptic };

const char* to_string(Ellipticity e);

struct EllipticityReport {
  double min_value{0.0};
  RankOnePair argmin;
  Ellipticity classification{Ellipticity::degenerate};
  // min_value / |L|_F, the quantity the classification thresholds.
  double relative_min{0.0};
  bool closed_form{false};
  // Value found by the angle search; equals min_value when no closed form applies.
  double search_value{0.0};
};

struct RankOneOptions {
  int grid_n{360};
  double refine_tol{1e-10};
  double degeneracy_tol{1e-7};
};

Ellipticity classify(double min_value, double scale, double degeneracy_tol);

// Minimum of (a(x)b).L(a(x)b) over unit vectors a, b. Throws
// std::invalid_argument if grid_n < 8.
EllipticityReport rank_one_min(const Tensor4& L, const RankOneOptions& opts = {});

double min_eigenvalue(const Tensor4& L);
bool is_psd(const Tensor4& L, double tol);

struct IsotropicProjection {
  double bulk{0.0};
  double shear{0.0};
  double residual{0.0};
  IsotropicModuli moduli() const { return IsotropicModuli::from_bulk_shear(bulk, shear); }
};

IsotropicProjection project_isotropic(const Tensor4& L);

nlohmann::ordered_json to_json(const Tensor4& L);
Tensor4 tensor_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const IsotropicModuli& m);
IsotropicModuli moduli_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const EllipticityReport& r);

}  // namespace isohom
