#include "isohom/tensor2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace isohom {

Mandel3 mandel_vector(const Mat2& G) {
  return {G(0, 0), G(1, 1), kSqrt2 * 0.5 * (G(0, 1) + G(1, 0))};
}

Mat2 from_mandel(const Mandel3& m) {
  Mat2 S;
  S << m(0), m(2) / kSqrt2, m(2) / kSqrt2, m(1);
  return S;
}

Mat2 sym(const Mat2& G) { return 0.5 * (G + G.transpose()); }

Tensor4::Tensor4(const Mat3& m) {
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-12 * scale)
    throw std::invalid_argument("Tensor4: Mandel matrix is not symmetric");
  mandel_ = 0.5 * (m + m.transpose());
}

Tensor4 Tensor4::isotropic(const IsotropicModuli& m) {
  Mat3 d;
  const double p = m.lambda + 2.0 * m.mu;
  d << p, m.lambda, 0.0,
       m.lambda, p, 0.0,
       0.0, 0.0, 2.0 * m.mu;
  return Tensor4(d, Trusted{});
}

namespace {

Mat2 basis_matrix(int a) {
  Mat2 E = Mat2::Zero();
  if (a == 0) E(0, 0) = 1.0;
  else if (a == 1) E(1, 1) = 1.0;
  else E(0, 1) = E(1, 0) = 1.0 / kSqrt2;
  return E;
}

}  // namespace

double Tensor4::component(int p, int q, int r, int s) const {
  double v = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double ea = basis_matrix(a)(p, q);
    if (ea == 0.0) continue;
    for (int b = 0; b < 3; ++b) v += ea * mandel_(a, b) * basis_matrix(b)(r, s);
  }
  return v;
}

Mat3 mandel_rotation(double angle) {
  Mat2 R;
  R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Mat3 Q;
  for (int a = 0; a < 3; ++a) Q.col(a) = mandel_vector(R * basis_matrix(a) * R.transpose());
  return Q;
}

Tensor4 Tensor4::rotated(double angle) const {
  const Mat3 Q = mandel_rotation(angle);
  const Mat3 r = Q * mandel_ * Q.transpose();
  return Tensor4(0.5 * (r + r.transpose()), Trusted{});
}

Mat2 apply(const Tensor4& L, const Mat2& G) { return from_mandel(L.mandel() * mandel_vector(G)); }

double energy(const Tensor4& L, const Mat2& G) {
  const Mandel3 m = mandel_vector(G);
  return m.dot(L.mandel() * m);
}

RankOnePair RankOnePair::from_angles(double angle_a, double angle_b) {
  return {Vec2(std::cos(angle_a), std::sin(angle_a)), Vec2(std::cos(angle_b), std::sin(angle_b))};
}

double RankOnePair::angle_a() const { return std::atan2(a(1), a(0)); }
double RankOnePair::angle_b() const { return std::atan2(b(1), b(0)); }

const char* to_string(Ellipticity e) {
  switch (e) {
    case Ellipticity::strictly_strongly_elliptic: return "strictly-strongly-elliptic";
    case Ellipticity::degenerate: return "degenerate";
    case Ellipticity::not_strongly_elliptic: return "not-strongly-elliptic";
  }
  return "unknown";
}

Ellipticity classify(double min_value, double scale, double degeneracy_tol) {
  const double rel = scale > 0.0 ? min_value / scale : 0.0;
  if (std::abs(rel) <= degeneracy_tol) return Ellipticity::degenerate;
  return rel > 0.0 ? Ellipticity::strictly_strongly_elliptic : Ellipticity::not_strongly_elliptic;
}

namespace {

double rank_one_value(const Mat3& L, double ta, double tb) {
  const double ca = std::cos(ta), sa = std::sin(ta), cb = std::cos(tb), sb = std::sin(tb);
  const Mandel3 m(ca * cb, sa * sb, kSqrt2 * 0.5 * (ca * sb + sa * cb));
  return m.dot(L * m);
}

struct AngleMin {
  double value;
  double ta;
  double tb;
};

// Compass search from a grid point; the objective is a smooth trigonometric
// polynomial, so halving the step until it drops below tol converges to the
// local minimum of the basin.
AngleMin compass_descent(const Mat3& L, AngleMin start, double h, double tol) {
  static constexpr double dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  AngleMin cur = start;
  while (h >= tol) {
    bool moved = false;
    for (const auto& d : dirs) {
      const double ta = cur.ta + h * d[0], tb = cur.tb + h * d[1];
      const double v = rank_one_value(L, ta, tb);
      if (v < cur.value) {
        cur = {v, ta, tb};
        moved = true;
        break;
      }
    }
    if (!moved) h *= 0.5;
  }
  return cur;
}

AngleMin search_rank_one(const Mat3& L, int grid_n, double refine_tol) {
  const double h = std::numbers::pi / grid_n;
  std::vector<AngleMin> samples;
  samples.reserve(static_cast<size_t>(grid_n) * grid_n);
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j)
      samples.push_back({rank_one_value(L, i * h, j * h), i * h, j * h});
  // Refine from a handful of the best grid points so that near-ties between
  // separate basins are resolved by the descent, not by the grid.
  const size_t starts = std::min<size_t>(4, samples.size());
  std::partial_sort(samples.begin(), samples.begin() + starts, samples.end(),
                    [](const AngleMin& x, const AngleMin& y) { return x.value < y.value; });
  AngleMin best = samples.front();
  for (size_t s = 0; s < starts; ++s) {
    const AngleMin r = compass_descent(L, samples[s], h, refine_tol);
    if (r.value < best.value) best = r;
  }
  return best;
}

double wrap_angle(double t) {
  t = std::fmod(t, std::numbers::pi);
  return t < 0.0 ? t + std::numbers::pi : t;
}

}  // namespace

EllipticityReport rank_one_min(const Tensor4& L, const RankOneOptions& opts) {
  if (opts.grid_n < 8) throw std::invalid_argument("rank_one_min: grid_n must be >= 8");
  const AngleMin found = search_rank_one(L.mandel(), opts.grid_n, opts.refine_tol);

  EllipticityReport rep;
  rep.search_value = found.value;
  rep.min_value = found.value;
  rep.argmin = RankOnePair::from_angles(wrap_angle(found.ta), wrap_angle(found.tb));

  const IsotropicProjection iso = project_isotropic(L);
  if (iso.residual <= 1e-12 * std::max(1.0, L.norm())) {
    const IsotropicModuli m = iso.moduli();
    const double transverse = m.mu, longitudinal = m.lambda + 2.0 * m.mu;
    rep.closed_form = true;
    if (transverse <= longitudinal) {
      rep.min_value = transverse;
      rep.argmin = RankOnePair::from_angles(0.0, 0.5 * std::numbers::pi);
    } else {
      rep.min_value = longitudinal;
      rep.argmin = RankOnePair::from_angles(0.0, 0.0);
    }
  }
  rep.relative_min = L.norm() > 0.0 ? rep.min_value / L.norm() : 0.0;
  rep.classification = classify(rep.min_value, L.norm(), opts.degeneracy_tol);
  return rep;
}

double min_eigenvalue(const Tensor4& L) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(L.mandel(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const Tensor4& L, double tol) { return min_eigenvalue(L) >= -tol; }

IsotropicProjection project_isotropic(const Tensor4& L) {
  const Mat3& m = L.mandel();
  IsotropicProjection p;
  p.bulk = (m(0, 0) + m(1, 1) + 2.0 * m(0, 1)) / 4.0;
  p.shear = (m.trace() - 2.0 * p.bulk) / 4.0;
  p.residual = (m - Tensor4::isotropic(p.moduli()).mandel()).norm();
  return p;
}

nlohmann::ordered_json to_json(const Tensor4& L) {
  nlohmann::ordered_json j;
  j["convention"] = "mandel, order (11,22,12), shear rows/columns scaled by sqrt(2), row-major";
  auto arr = nlohmann::ordered_json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) arr.push_back(L(i, k));
  j["mandel"] = std::move(arr);
  return j;
}

Tensor4 tensor_from_json(const nlohmann::ordered_json& j) {
  const auto& arr = j.at("mandel");
  if (!arr.is_array() || arr.size() != 9)
    throw std::invalid_argument("tensor: \"mandel\" must be a 9-element array");
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = arr.at(3 * i + k).get<double>();
  return Tensor4(m);
}

nlohmann::ordered_json to_json(const IsotropicModuli& m) {
  return {{"lambda", m.lambda}, {"mu", m.mu}};
}

IsotropicModuli moduli_from_json(const nlohmann::ordered_json& j) {
  for (const auto& [key, _] : j.items())
    if (key != "lambda" && key != "mu")
      throw std::invalid_argument("moduli: unknown key \"" + key + "\"");
  return {j.at("lambda").get<double>(), j.at("mu").get<double>()};
}

nlohmann::ordered_json to_json(const EllipticityReport& r) {
  nlohmann::ordered_json j;
  j["min_value"] = r.min_value;
  j["relative_min"] = r.relative_min;
  j["classification"] = to_string(r.classification);
  j["argmin"] = {{"a", {r.argmin.a(0), r.argmin.a(1)}}, {"b", {r.argmin.b(0), r.argmin.b(1)}}};
  j["closed_form"] = r.closed_form;
  j["search_value"] = r.search_value;
  return j;
}

}  // namespace isohom
