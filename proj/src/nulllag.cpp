#include "isohom/nulllag.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace isohom {

namespace {

Mat2 outer(double x, double y) {
  Vec2 v(x, y);
  return v * v.transpose();
}

double min_eig(const Mat2& Q) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(Q);
  return es.eigenvalues()(0);
}

}  // namespace

DensityDecomposition decompose(const IsotropicModuli& phase1, const IsotropicModuli& phase2) {
  DensityDecomposition d;
  d.mu1 = phase1.mu;
  const IsotropicModuli ph[2] = {phase1, phase2};
  for (int i = 0; i < 2; ++i) {
    const double l = ph[i].lambda, m = ph[i].mu;
    d.phases[i].P << l + 2.0 * m, l + 2.0 * d.mu1, l + 2.0 * d.mu1, l + 2.0 * m;
    d.phases[i].R << m, m - 2.0 * d.mu1, m - 2.0 * d.mu1, m;
  }

  const Mat2 plus = outer(1.0, 1.0), minus = outer(1.0, -1.0), id = Mat2::Identity();
  const Mat2 S[4] = {plus, minus, minus, id};
  const Mat2 Q[4] = {d.phases[0].P, d.phases[0].R, d.phases[1].P, d.phases[1].R};
  for (int f = 0; f < 4; ++f) d.kernels[f] = null_direction(Q[f]);

  if (check_phase_conditions(phase1, phase2).all()) {
    const double mu1 = phase1.mu, mu2 = phase2.mu;
    d.directional = {phase1.lambda + 2.0 * mu1, mu1, mu2 - mu1, std::min(2.0 * mu1, 2.0 * (mu2 - mu1))};
    d.alpha = *std::min_element(d.directional.begin(), d.directional.end());
    double numeric = std::numeric_limits<double>::infinity();
    for (int f = 0; f < 4; ++f) numeric = std::min(numeric, largest_admissible_multiple(Q[f], S[f]));
    d.alpha_numeric = numeric;
  }
  return d;
}

double split_density(const PhaseForms& f, const Mat2& G) {
  const Vec2 ab(G(0, 0), G(1, 1)), cd(G(0, 1), G(1, 0));
  return ab.dot(f.P * ab) + cd.dot(f.R * cd);
}

double largest_admissible_multiple(const Mat2& Q, const Mat2& S) {
  const double unit = std::max(Q.norm(), 1e-300) / std::max(S.norm(), 1e-300);
  const double tol = 1e-14 * std::max(Q.norm(), S.norm());
  auto admissible = [&](double a) { return min_eig(Q - a * S) >= -tol; };
  // Bracket the threshold with admissible(lo) and !admissible(hi).
  double lo = 0.0, hi = unit;
  if (admissible(lo)) {
    while (admissible(hi)) {
      lo = hi;
      hi *= 2.0;
    }
  } else {
    hi = 0.0;
    lo = -unit;
    while (!admissible(lo)) {
      hi = lo;
      lo *= 2.0;
    }
  }
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (admissible(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::optional<Vec2> null_direction(const Mat2& Q, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(Q);
  const double scale = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(1)));
  for (int i = 0; i < 2; ++i) {
    if (std::abs(es.eigenvalues()(i)) <= rel_tol * scale) {
      Vec2 v = es.eigenvectors().col(i).normalized();
      const double lead = std::abs(v(0)) > 1e-12 ? v(0) : v(1);
      if (lead < 0.0) v = -v;
      return v;
    }
  }
  return std::nullopt;
}

namespace {

std::vector<double> density(const Microstructure& m, const std::vector<Mat2>& G_field, double shift) {
  const int n = m.n();
  if (G_field.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("shifted_density: gradient field has the wrong size");
  const Tensor4 L[2] = {Tensor4::isotropic(m.phase2()), Tensor4::isotropic(m.phase1())};
  std::vector<double> out(G_field.size());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * n + c;
      out[p] = energy(L[m.at(r, c)], G_field[p]) + shift * G_field[p].determinant();
    }
  return out;
}

}  // namespace

std::vector<double> shifted_density(const Microstructure& m, const std::vector<Mat2>& G_field) {
  return density(m, G_field, 4.0 * m.phase1().mu);
}

std::vector<double> unshifted_density(const Microstructure& m, const std::vector<Mat2>& G_field) {
  return density(m, G_field, 0.0);
}

double torus_mean(const std::vector<double>& f) {
  if (f.empty()) return 0.0;
  return std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
}

nlohmann::ordered_json to_json(const DensityDecomposition& d) {
  const auto mat = [](const Mat2& M) {
    return nlohmann::ordered_json::array({{M(0, 0), M(0, 1)}, {M(1, 0), M(1, 1)}});
  };
  const char* names[4] = {"P1", "R1", "P2", "R2"};
  nlohmann::ordered_json j;
  j["null_lagrangian_coefficient"] = 4.0 * d.mu1;
  auto phases = nlohmann::ordered_json::array();
  for (int i = 0; i < 2; ++i) {
    nlohmann::ordered_json p;
    p["P"] = mat(d.phases[i].P);
    p["P_variables"] = "G11,G22";
    p["R"] = mat(d.phases[i].R);
    p["R_variables"] = "G12,G21";
    phases.push_back(std::move(p));
  }
  j["phases"] = std::move(phases);
  if (d.alpha) {
    j["alpha"] = *d.alpha;
    j["alpha_numeric"] = *d.alpha_numeric;
    j["directional_constants"] = d.directional;
  } else {
    j["alpha"] = "not_applicable";
  }
  nlohmann::ordered_json k;
  for (int f = 0; f < 4; ++f) {
    if (d.kernels[f])
      k[names[f]] = {(*d.kernels[f])(0), (*d.kernels[f])(1)};
    else
      k[names[f]] = nullptr;
  }
  j["kernels"] = std::move(k);
  return j;
}

}  // namespace isohom
