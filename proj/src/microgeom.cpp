#include "isohom/microgeom.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

namespace isohom {

namespace {

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

void reject_unknown_keys(const nlohmann::ordered_json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw std::invalid_argument(where + ": unknown key \"" + key + "\"");
  }
}

}  // namespace

Microstructure::Microstructure(int n, std::vector<std::uint8_t> chi, IsotropicModuli phase1,
                               IsotropicModuli phase2)
    : n_(n), chi_(std::move(chi)), phase1_(phase1), phase2_(phase2) {
  if (n_ < 1) throw std::invalid_argument("Microstructure: resolution must be positive");
  if (chi_.size() != static_cast<size_t>(n_) * n_)
    throw std::invalid_argument("Microstructure: chi must have n*n entries");
  if (std::any_of(chi_.begin(), chi_.end(), [](std::uint8_t v) { return v > 1; }))
    throw std::invalid_argument("Microstructure: chi must contain only 0 and 1");
}

std::uint8_t Microstructure::at(int row, int col) const {
  return chi_[static_cast<size_t>(wrap(row, n_)) * n_ + wrap(col, n_)];
}

std::size_t Microstructure::phase1_cells() const {
  return static_cast<size_t>(std::count(chi_.begin(), chi_.end(), std::uint8_t{1}));
}

double Microstructure::volume_fraction() const {
  return static_cast<double>(phase1_cells()) / static_cast<double>(chi_.size());
}

Tensor4 Microstructure::stiffness_at(int row, int col) const {
  return Tensor4::isotropic(at(row, col) ? phase1_ : phase2_);
}

Tensor4 Microstructure::voigt_mean() const {
  const double theta = volume_fraction();
  return theta * Tensor4::isotropic(phase1_) + (1.0 - theta) * Tensor4::isotropic(phase2_);
}

Tensor4 Microstructure::reuss_mean() const {
  const double theta = volume_fraction();
  Mat3 compliance = Mat3::Zero();
  const auto add = [&](const IsotropicModuli& p, double w) {
    if (w == 0.0) return;
    const Mat3 L = Tensor4::isotropic(p).mandel();
    Eigen::FullPivLU<Mat3> lu(L);
    if (!lu.isInvertible()) throw std::domain_error("reuss_mean: singular phase tensor");
    compliance += w * lu.inverse();
  };
  add(phase1_, theta);
  add(phase2_, 1.0 - theta);
  const Mat3 inv = compliance.inverse();
  return Tensor4(0.5 * (inv + inv.transpose()));
}

Microstructure Microstructure::shifted(int drow, int dcol) const {
  std::vector<std::uint8_t> out(chi_.size());
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c) out[static_cast<size_t>(r) * n_ + c] = at(r - drow, c - dcol);
  return {n_, std::move(out), phase1_, phase2_};
}

Microstructure Microstructure::rotated90() const {
  std::vector<std::uint8_t> out(chi_.size());
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c) out[static_cast<size_t>(r) * n_ + c] = at(-c, r);
  return {n_, std::move(out), phase1_, phase2_};
}

Microstructure Microstructure::upsampled(int factor) const {
  if (factor < 1) throw std::invalid_argument("upsampled: factor must be positive");
  const int m = n_ * factor;
  std::vector<std::uint8_t> out(static_cast<size_t>(m) * m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) out[static_cast<size_t>(r) * m + c] = at(r / factor, c / factor);
  return {m, std::move(out), phase1_, phase2_};
}

Microstructure Microstructure::with_phases(IsotropicModuli phase1, IsotropicModuli phase2) const {
  return {n_, chi_, phase1, phase2};
}

Microstructure laminate(int n, double theta, int normal_axis, IsotropicModuli phase1,
                        IsotropicModuli phase2) {
  if (n < 2) throw std::invalid_argument("laminate: n must be >= 2");
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("laminate: theta must lie in [0, 1]");
  if (normal_axis != 1 && normal_axis != 2) throw std::invalid_argument("laminate: normal_axis must be 1 or 2");
  // std::round rounds halfway cases away from zero.
  const int width = static_cast<int>(std::round(theta * n));
  std::vector<std::uint8_t> chi(static_cast<size_t>(n) * n, 0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const int along = normal_axis == 1 ? c : r;
      if (along < width) chi[static_cast<size_t>(r) * n + c] = 1;
    }
  return {n, std::move(chi), phase1, phase2};
}

Microstructure disk(int n, double radius, Vec2 center, IsotropicModuli phase1, IsotropicModuli phase2) {
  if (n < 1) throw std::invalid_argument("disk: n must be positive");
  if (!(radius > 0.0 && radius < 0.5))
    throw std::invalid_argument("disk: radius must satisfy 0 < radius < 0.5");
  if (!(center(0) >= 0.0 && center(0) < 1.0 && center(1) >= 0.0 && center(1) < 1.0))
    throw std::invalid_argument("disk: center must lie in [0,1)^2");
  const auto torus = [](double d) {
    d = std::abs(d);
    return std::min(d, 1.0 - d);
  };
  std::vector<std::uint8_t> chi(static_cast<size_t>(n) * n, 0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double dx = torus((c + 0.5) / n - center(0));
      const double dy = torus((r + 0.5) / n - center(1));
      if (dx * dx + dy * dy < radius * radius) chi[static_cast<size_t>(r) * n + c] = 1;
    }
  return {n, std::move(chi), phase1, phase2};
}

Microstructure homogeneous(int n, IsotropicModuli phase) {
  return {n, std::vector<std::uint8_t>(static_cast<size_t>(n) * n, 1), phase, phase};
}

// ---------------------------------------------------------------------------
// PGM

namespace {

void skip_space_and_comments(std::istream& in) {
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (ch != EOF && std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

long read_header_int(std::istream& in) {
  skip_space_and_comments(in);
  long v = -1;
  if (!(in >> v) || v < 0) throw RasterError("malformed header");
  return v;
}

}  // namespace

std::vector<std::uint8_t> read_pgm_chi(std::istream& in, int& n) {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5'))
    throw RasterError("malformed header: expected P2 or P5");
  const bool binary = magic[1] == '5';
  const long width = read_header_int(in);
  const long height = read_header_int(in);
  const long maxval = read_header_int(in);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
    throw RasterError("malformed header");
  if (width != height) throw RasterError("non-square image");
  n = static_cast<int>(width);

  std::vector<std::uint8_t> chi(static_cast<size_t>(n) * n);
  const auto classify_pixel = [&](long v) -> std::uint8_t {
    if (v == 0) return 0;
    if (v == maxval) return 1;
    throw RasterError("ambiguous phase: pixel value " + std::to_string(v) + " with maxval " +
                      std::to_string(maxval));
  };
  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (!std::isspace(in.get())) throw RasterError("malformed header");
    const int bytes = maxval < 256 ? 1 : 2;
    for (auto& px : chi) {
      long v = 0;
      for (int b = 0; b < bytes; ++b) {
        const int ch = in.get();
        if (ch == EOF) throw RasterError("truncated raster data");
        v = (v << 8) | (ch & 0xff);
      }
      px = classify_pixel(v);
    }
  } else {
    for (auto& px : chi) {
      skip_space_and_comments(in);
      long v = 0;
      if (!(in >> v)) throw RasterError("truncated raster data");
      px = classify_pixel(v);
    }
  }
  return chi;
}

Microstructure from_raster(const std::filesystem::path& path, IsotropicModuli phase1, IsotropicModuli phase2) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RasterError("cannot open raster " + path.string());
  int n = 0;
  auto chi = read_pgm_chi(in, n);
  return {n, std::move(chi), phase1, phase2};
}

void write_pgm(std::ostream& out, const Microstructure& m, PgmFormat fmt) {
  const int n = m.n();
  if (fmt == PgmFormat::plain) {
    out << "P2\n" << n << ' ' << n << "\n1\n";
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) out << (c ? " " : "") << int(m.at(r, c));
      out << '\n';
    }
  } else {
    out << "P5\n" << n << ' ' << n << "\n255\n";
    for (std::uint8_t v : m.chi()) out.put(static_cast<char>(v ? 255 : 0));
  }
}

void to_raster(const Microstructure& m, const std::filesystem::path& path, PgmFormat fmt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RasterError("cannot write raster " + path.string());
  write_pgm(out, m, fmt);
}

// ---------------------------------------------------------------------------
// Hypotheses on the phases and the geometry

PhaseConditions check_phase_conditions(const IsotropicModuli& p1, const IsotropicModuli& p2) {
  PhaseConditions c;
  c.mu1_positive = p1.mu > 0.0;
  const double scale = std::max({std::abs(p1.mu), std::abs(p2.lambda), std::abs(p2.mu)});
  c.shear_bulk_equality = std::abs(p1.mu + p2.lambda + p2.mu) <= 1e-12 * scale;
  c.mu1_below_mu2 = p1.mu < p2.mu;
  c.bulk1_positive = p1.bulk() > 0.0;
  return c;
}

int matrix_components(const Microstructure& m) {
  const int n = m.n();
  std::vector<char> seen(static_cast<size_t>(n) * n, 0);
  int components = 0;
  std::queue<std::pair<int, int>> q;
  for (int r0 = 0; r0 < n; ++r0)
    for (int c0 = 0; c0 < n; ++c0) {
      const size_t idx0 = static_cast<size_t>(r0) * n + c0;
      if (m.at(r0, c0) != 0 || seen[idx0]) continue;
      ++components;
      seen[idx0] = 1;
      q.emplace(r0, c0);
      while (!q.empty()) {
        const auto [r, c] = q.front();
        q.pop();
        const int nb[4][2] = {{r + 1, c}, {r - 1, c}, {r, c + 1}, {r, c - 1}};
        for (const auto& p : nb) {
          const int rr = wrap(p[0], n), cc = wrap(p[1], n);
          const size_t idx = static_cast<size_t>(rr) * n + cc;
          if (m.at(rr, cc) == 0 && !seen[idx]) {
            seen[idx] = 1;
            q.emplace(rr, cc);
          }
        }
      }
    }
  return components;
}

AdmissibilityReport check_admissibility(const Microstructure& m) {
  AdmissibilityReport r;
  r.phases = check_phase_conditions(m.phase1(), m.phase2());
  r.cond_eq3 = r.phases.all();
  r.matrix_components = matrix_components(m);
  r.matrix_connected = r.matrix_components == 1;
  r.volume_fraction = m.volume_fraction();
  return r;
}

nlohmann::ordered_json to_json(const AdmissibilityReport& r) {
  nlohmann::ordered_json j;
  j["phase_conditions"] = {
      {"holds", r.cond_eq3},
      {"mu1_positive", r.phases.mu1_positive},
      {"mu1_equals_minus_bulk2", r.phases.shear_bulk_equality},
      {"mu1_below_mu2", r.phases.mu1_below_mu2},
      {"bulk1_positive", r.phases.bulk1_positive},
  };
  j["matrix_connected"] = r.matrix_connected;
  j["matrix_components"] = r.matrix_components;
  j["volume_fraction"] = r.volume_fraction;
  return j;
}

Microstructure microstructure_from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j, {"n", "generator", "phase1", "phase2"}, "microstructure");
  const IsotropicModuli p1 = moduli_from_json(j.at("phase1"));
  const IsotropicModuli p2 = moduli_from_json(j.at("phase2"));
  const auto& g = j.at("generator");
  const std::string kind = g.at("kind").get<std::string>();
  if (kind == "laminate") {
    reject_unknown_keys(g, {"kind", "theta", "normal_axis"}, "generator");
    return laminate(j.at("n").get<int>(), g.at("theta").get<double>(), g.value("normal_axis", 1), p1, p2);
  }
  if (kind == "disk") {
    reject_unknown_keys(g, {"kind", "radius", "center"}, "generator");
    Vec2 center(0.5, 0.5);
    if (g.contains("center")) center = Vec2(g["center"].at(0).get<double>(), g["center"].at(1).get<double>());
    return disk(j.at("n").get<int>(), g.at("radius").get<double>(), center, p1, p2);
  }
  if (kind == "raster") {
    reject_unknown_keys(g, {"kind", "path"}, "generator");
    std::filesystem::path path = g.at("path").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    Microstructure m = from_raster(path, p1, p2);
    if (j.contains("n")) {
      const int n = j["n"].get<int>();
      if (n % m.n() != 0)
        throw std::invalid_argument("microstructure: n must be a multiple of the raster size");
      if (n != m.n()) m = m.upsampled(n / m.n());
    }
    return m;
  }
  throw std::invalid_argument("generator: unknown kind \"" + kind + "\"");
}

}  // namespace isohom
