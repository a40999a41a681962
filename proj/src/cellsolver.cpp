#include "isohom/cellsolver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace isohom {

using spectral::CVector;
using spectral::PeriodicOperator;

const char* to_string(CgStatus s) {
  switch (s) {
    case CgStatus::converged: return "converged";
    case CgStatus::indefinite: return "indefinite";
    case CgStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

CorrectorField::CorrectorField(int n, CVector coeffs)
    : n_(n), modes_(spectral::half_lattice(n)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != static_cast<Eigen::Index>(2 * modes_.size()))
    throw std::invalid_argument("CorrectorField: coefficient count does not match the lattice");
}

spectral::cplx CorrectorField::coefficient(int k1, int k2, int component) const {
  const int kmax = spectral::max_frequency(n_);
  if (std::abs(k1) > kmax || std::abs(k2) > kmax || (k1 == 0 && k2 == 0)) return 0.0;
  const bool direct = k1 > 0 || (k1 == 0 && k2 > 0);
  const int a = direct ? k1 : -k1, b = direct ? k2 : -k2;
  const Eigen::Index idx = a == 0 ? b - 1 : kmax + static_cast<Eigen::Index>(a - 1) * (2 * kmax + 1) + (b + kmax);
  const spectral::cplx c = coeffs_(2 * idx + component);
  return direct ? c : std::conj(c);
}

std::vector<double> CorrectorField::real_space(int component) const {
  return spectral::synthesize(n_, modes_, coeffs_, component);
}

std::array<Mandel3, 3> loading_basis() {
  return {Mandel3(1.0, 0.0, 0.0), Mandel3(0.0, 1.0, 0.0), Mandel3(0.0, 0.0, 1.0 / kSqrt2)};
}

namespace {

double norm(const CVector& v) { return std::sqrt(PeriodicOperator::inner(v, v)); }

// Residual norm below which the loading is treated as exactly equilibrated.
// Constant coefficient fields produce b = 0 up to FFT rounding.
double zero_load_threshold(const PeriodicOperator& op, const Mandel3& E) {
  const auto& c = op.coefficients();
  const double lmax = std::max(c.matrix_tensor().norm(), (c.matrix_tensor() + c.contrast()).norm());
  return 1e-12 * spectral::kTwoPi * lmax * E.norm() * op.n();
}

}  // namespace

CorrectorResult solve_corrector(const PeriodicOperator& op, const Mat2& M, const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_corrector: tol must be positive");
  const Mandel3 E = mandel_vector(M);
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * op.n();

  CorrectorResult res;
  CVector x = CVector::Zero(op.size());
  const CVector b = op.gradient(x, E);
  const double bnorm = norm(b);
  if (bnorm <= zero_load_threshold(op, E) || op.size() == 0) {
    res.field = CorrectorField(op.n(), x);
    return res;
  }

  CVector r = -b;
  CVector z = op.precondition(r);
  CVector p = z;
  double rz = PeriodicOperator::inner(r, z);
  res.status = CgStatus::max_iter;
  for (int it = 1; it <= max_iter; ++it) {
    res.iterations = it;
    const CVector Ap = op.apply(p);
    const double curvature = PeriodicOperator::inner(p, Ap);
    if (!(curvature > 0.0)) {
      res.status = CgStatus::indefinite;
      break;
    }
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * Ap;
    res.relative_residual = norm(r) / bnorm;
    if (res.relative_residual <= opts.tol) {
      // Confirm against the true residual; restart from it if the recursion drifted.
      r = -op.gradient(x, E);
      res.relative_residual = norm(r) / bnorm;
      if (res.relative_residual <= opts.tol) {
        res.status = CgStatus::converged;
        break;
      }
      z = op.precondition(r);
      p = z;
      rz = PeriodicOperator::inner(r, z);
      continue;
    }
    z = op.precondition(r);
    const double rz_next = PeriodicOperator::inner(r, z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  if (res.status != CgStatus::converged) res.relative_residual = norm(op.gradient(x, E)) / bnorm;
  res.field = CorrectorField(op.n(), std::move(x));
  return res;
}

CorrectorResult solve_corrector(const Microstructure& m, const Mat2& M, const SolverOptions& opts) {
  const PeriodicOperator op(m, opts.reference.value_or(spectral::default_reference(m)));
  return solve_corrector(op, M, opts);
}

CellSolution homogenize(const Microstructure& m, const SolverOptions& opts) {
  const IsotropicModuli ref = opts.reference.value_or(spectral::default_reference(m));
  const PeriodicOperator op(m, ref);
  const auto basis = loading_basis();

  CellSolution sol;
  sol.resolution = m.n();
  sol.theta = m.volume_fraction();
  sol.diagnostics.reference = ref;
  sol.diagnostics.tol = opts.tol;
  sol.diagnostics.max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * m.n();

  std::array<std::array<std::vector<double>, 3>, 3> strain;
  std::array<std::array<std::vector<double>, 3>, 3> stress;
  for (int i = 0; i < 3; ++i) {
    CorrectorResult r = solve_corrector(op, from_mandel(basis[i]), opts);
    sol.diagnostics.cg_iterations[i] = r.iterations;
    sol.diagnostics.relative_residual[i] = r.relative_residual;
    sol.diagnostics.status[i] = r.status;
    if (r.status == CgStatus::indefinite) sol.diagnostics.indefiniteness_detected = true;
    if (r.status != CgStatus::converged) sol.diagnostics.converged = false;
    op.total_strain(r.field.coefficients(), basis[i], strain[i]);
    op.coefficients().stress(strain[i], stress[i]);
    sol.correctors[i] = std::move(r.field);
  }

  Mat3 G;
  const double count = static_cast<double>(strain[0][0].size());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (size_t p = 0; p < strain[i][0].size(); ++p)
        s += strain[i][0][p] * stress[j][0][p] + strain[i][1][p] * stress[j][1][p] +
             strain[i][2][p] * stress[j][2][p];
      G(i, j) = s / count;
    }
  sol.diagnostics.asymmetry = G.norm() > 0.0 ? (G - G.transpose()).norm() / G.norm() : 0.0;

  const Eigen::Vector3d scale(basis[0](0), basis[1](1), basis[2](2));
  Mat3 L = 0.5 * (G + G.transpose());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) L(i, j) /= scale(i) * scale(j);
  sol.lstar = Tensor4(L);
  return sol;
}

double energy_of(const Microstructure& m, const Mat2& M, const CorrectorField& v) {
  if (v.n() != m.n()) throw std::invalid_argument("energy_of: corrector resolution does not match");
  const PeriodicOperator op(m);
  return op.energy(v.coefficients(), mandel_vector(M));
}

nlohmann::ordered_json to_json(const CellDiagnostics& d) {
  nlohmann::ordered_json j;
  j["cg_iterations"] = d.cg_iterations;
  j["relative_residual"] = d.relative_residual;
  auto st = nlohmann::ordered_json::array();
  for (auto s : d.status) st.push_back(to_string(s));
  j["status"] = std::move(st);
  j["indefiniteness_detected"] = d.indefiniteness_detected;
  j["converged"] = d.converged;
  j["gram_asymmetry"] = d.asymmetry;
  j["reference"] = to_json(d.reference);
  j["tol"] = d.tol;
  j["max_iter"] = d.max_iter;
  return j;
}

nlohmann::ordered_json to_json(const CellSolution& s) {
  nlohmann::ordered_json j;
  j["lstar"] = to_json(s.lstar);
  j["theta"] = s.theta;
  j["resolution"] = s.resolution;
  j["diagnostics"] = to_json(s.diagnostics);
  return j;
}

void write_corrector(const CorrectorField& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corrector dump " + path.string());
  const auto put_le = [&](auto value) {
    using T = decltype(value);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
  };
  out.write(kCorrectorMagic, 8);
  put_le(static_cast<std::uint64_t>(v.n()));
  const auto u1 = v.real_space(0), u2 = v.real_space(1);
  for (size_t p = 0; p < u1.size(); ++p) {
    put_le(u1[p]);
    put_le(u2[p]);
  }
}

}  // namespace isohom
