#include "isohom/spectral.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace isohom::spectral {

namespace {

// The FFTW planner is not reentrant. FFTW_ESTIMATE keeps plan selection,
// and with it every floating-point result, independent of timing.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (!p) throw std::bad_alloc();
  std::memset(static_cast<void*>(p), 0, sizeof(T) * count);
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : p_(p) {
    if (!p_) throw std::runtime_error("FFTW plan creation failed");
  }
  Plan(Plan&& o) noexcept : p_(std::exchange(o.p_, nullptr)) {}
  Plan& operator=(Plan&& o) noexcept {
    std::swap(p_, o.p_);
    return *this;
  }
  ~Plan() {
    if (p_) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(p_);
    }
  }
  void execute() const { fftw_execute(p_); }

 private:
  fftw_plan p_{nullptr};
};

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

cplx* as_cplx(fftw_complex* p) { return reinterpret_cast<cplx*>(p); }

}  // namespace

// Scratch buffers and plans on an N x N grid; real-to-complex (half spectrum)
// or complex-to-complex depending on the owner.
struct FftPlans {
  int N;
  FftwBuffer<double> real;
  FftwBuffer<fftw_complex> spec;
  Plan forward;
  Plan backward;

  static std::unique_ptr<FftPlans> real_grid(int N) {
    auto f = std::make_unique<FftPlans>();
    f->N = N;
    f->real = fftw_buffer<double>(static_cast<size_t>(N) * N);
    f->spec = fftw_buffer<fftw_complex>(static_cast<size_t>(N) * (N / 2 + 1));
    std::lock_guard lock(planner_mutex());
    f->forward = Plan(fftw_plan_dft_r2c_2d(N, N, f->real.get(), f->spec.get(), FFTW_ESTIMATE));
    f->backward = Plan(fftw_plan_dft_c2r_2d(N, N, f->spec.get(), f->real.get(), FFTW_ESTIMATE));
    return f;
  }

  static std::unique_ptr<FftPlans> complex_grid(int N) {
    auto f = std::make_unique<FftPlans>();
    f->N = N;
    f->spec = fftw_buffer<fftw_complex>(static_cast<size_t>(N) * N);
    std::lock_guard lock(planner_mutex());
    f->forward = Plan(fftw_plan_dft_2d(N, N, f->spec.get(), f->spec.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    f->backward = Plan(fftw_plan_dft_2d(N, N, f->spec.get(), f->spec.get(), FFTW_BACKWARD, FFTW_ESTIMATE));
    return f;
  }

  std::size_t half() const { return static_cast<size_t>(N / 2 + 1); }
};

// ---------------------------------------------------------------------------

std::vector<Mode> half_lattice(int n) {
  const int kmax = max_frequency(n);
  std::vector<Mode> modes;
  for (int k1 = 0; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      modes.push_back({k1, k2});
    }
  return modes;
}

CoefficientField::CoefficientField(const Microstructure& m) : n_(m.n()) {
  l2_ = Tensor4::isotropic(m.phase2()).mandel();
  dl_ = Tensor4::isotropic(m.phase1()).mandel() - l2_;
  const int N = fine();
  chi_.resize(static_cast<size_t>(N) * N);
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) chi_[static_cast<size_t>(r) * N + c] = m.at(r / 2, c / 2) ? 1.0 : 0.0;
}

void CoefficientField::stress(const std::array<std::vector<double>, 3>& eps,
                              std::array<std::vector<double>, 3>& sig) const {
  const size_t count = chi_.size();
  for (auto& s : sig) s.resize(count);
  for (size_t p = 0; p < count; ++p) {
    const Mandel3 e(eps[0][p], eps[1][p], eps[2][p]);
    const Mandel3 s = l2_ * e + chi_[p] * (dl_ * e);
    sig[0][p] = s(0);
    sig[1][p] = s(1);
    sig[2][p] = s(2);
  }
}

void CoefficientField::stress(const std::array<std::vector<cplx>, 3>& eps,
                              std::array<std::vector<cplx>, 3>& sig) const {
  const size_t count = chi_.size();
  for (auto& s : sig) s.resize(count);
  for (size_t p = 0; p < count; ++p) {
    const Mat3 L = l2_ + chi_[p] * dl_;
    for (int i = 0; i < 3; ++i) sig[i][p] = L(i, 0) * eps[0][p] + L(i, 1) * eps[1][p] + L(i, 2) * eps[2][p];
  }
}

IsotropicModuli default_reference(const Microstructure& m) {
  const double mu0 = 0.5 * (m.phase1().mu + m.phase2().mu);
  const double bulk0 = std::max(m.phase1().bulk(), mu0);
  return IsotropicModuli::from_bulk_shear(bulk0, mu0);
}

Eigen::Matrix<double, 3, 2> strain_symbol(double k1, double k2) {
  Eigen::Matrix<double, 3, 2> S;
  S << k1, 0.0,
       0.0, k2,
       k2 / kSqrt2, k1 / kSqrt2;
  return S;
}

Mat2 reference_inverse(const IsotropicModuli& ref, double k1, double k2) {
  const double s = kTwoPi * kTwoPi;
  Mat2 A;
  const double kk = k1 * k1 + k2 * k2;
  A << ref.mu * kk + (ref.lambda + ref.mu) * k1 * k1, (ref.lambda + ref.mu) * k1 * k2,
       (ref.lambda + ref.mu) * k1 * k2, ref.mu * kk + (ref.lambda + ref.mu) * k2 * k2;
  return (s * A).inverse();
}

// ---------------------------------------------------------------------------

PeriodicOperator::PeriodicOperator(const Microstructure& m, IsotropicModuli reference)
    : coeff_(m), reference_(reference) {
  if (!reference_.very_strongly_elliptic())
    throw std::invalid_argument("PeriodicOperator: reference medium must be very strongly elliptic");
  const int n = m.n(), N = 2 * n;
  fft_ = FftPlans::real_grid(N);
  const size_t half = fft_->half();
  modes_ = half_lattice(n);
  for (const Mode& k : modes_) {
    index_.push_back(static_cast<size_t>(wrap(k.k2, N)) * half + k.k1);
    mirror_.push_back(k.k1 == 0 ? static_cast<size_t>(wrap(-k.k2, N)) * half : 0);
  }
}

PeriodicOperator::~PeriodicOperator() = default;

void PeriodicOperator::total_strain(const CVector& v, const Mandel3& loading,
                                    std::array<std::vector<double>, 3>& eps) const {
  const int N = fft_->N;
  const size_t count = static_cast<size_t>(N) * N;
  const size_t spec_count = static_cast<size_t>(N) * fft_->half();
  cplx* h = as_cplx(fft_->spec.get());
  const cplx i2pi(0.0, kTwoPi);
  for (int c = 0; c < 3; ++c) {
    std::fill(h, h + spec_count, cplx(0.0));
    h[0] = loading(c);
    for (size_t j = 0; j < modes_.size(); ++j) {
      const auto S = strain_symbol(modes_[j].k1, modes_[j].k2);
      const cplx e = i2pi * (S(c, 0) * v(2 * j) + S(c, 1) * v(2 * j + 1));
      h[index_[j]] = e;
      if (modes_[j].k1 == 0) h[mirror_[j]] = std::conj(e);
    }
    fft_->backward.execute();
    eps[c].assign(fft_->real.get(), fft_->real.get() + count);
  }
}

CVector PeriodicOperator::project(std::array<std::vector<double>, 3>& sig) const {
  const int N = fft_->N;
  const double scale = 1.0 / (static_cast<double>(N) * N);
  CVector r = CVector::Zero(size());
  const cplx mi2pi(0.0, -kTwoPi);
  const cplx* h = as_cplx(fft_->spec.get());
  for (int c = 0; c < 3; ++c) {
    std::copy(sig[c].begin(), sig[c].end(), fft_->real.get());
    fft_->forward.execute();
    for (size_t j = 0; j < modes_.size(); ++j) {
      const auto S = strain_symbol(modes_[j].k1, modes_[j].k2);
      const cplx s = h[index_[j]] * scale;
      r(2 * j) += mi2pi * S(c, 0) * s;
      r(2 * j + 1) += mi2pi * S(c, 1) * s;
    }
  }
  return r;
}

CVector PeriodicOperator::gradient(const CVector& v, const Mandel3& loading) const {
  total_strain(v, loading, eps_);
  coeff_.stress(eps_, sig_);
  return project(sig_);
}

CVector PeriodicOperator::precondition(const CVector& r) const {
  CVector z(r.size());
  for (size_t j = 0; j < modes_.size(); ++j) {
    const Mat2 P = reference_inverse(reference_, modes_[j].k1, modes_[j].k2);
    z(2 * j) = P(0, 0) * r(2 * j) + P(0, 1) * r(2 * j + 1);
    z(2 * j + 1) = P(1, 0) * r(2 * j) + P(1, 1) * r(2 * j + 1);
  }
  return z;
}

double PeriodicOperator::bilinear(const CVector& vi, const Mandel3& mi, const CVector& vj,
                                  const Mandel3& mj) const {
  std::array<std::vector<double>, 3> ei;
  total_strain(vi, mi, ei);
  total_strain(vj, mj, eps_);
  coeff_.stress(eps_, sig_);
  double sum = 0.0;
  for (size_t p = 0; p < ei[0].size(); ++p)
    sum += ei[0][p] * sig_[0][p] + ei[1][p] * sig_[1][p] + ei[2][p] * sig_[2][p];
  return sum / static_cast<double>(ei[0].size());
}

double PeriodicOperator::energy(const CVector& v, const Mandel3& loading) const {
  return bilinear(v, loading, v, loading);
}

// ---------------------------------------------------------------------------

BlochOperator::BlochOperator(const Microstructure& m, Vec2 kappa, IsotropicModuli reference)
    : coeff_(m), kappa_(kappa), reference_(reference) {
  if (!reference_.very_strongly_elliptic())
    throw std::invalid_argument("BlochOperator: reference medium must be very strongly elliptic");
  const int n = m.n(), N = 2 * n, kmax = max_frequency(n);
  const bool periodic = kappa_.isZero(0.0);
  fft_ = FftPlans::complex_grid(N);
  std::vector<double> gram;
  for (int q2 = -kmax; q2 <= kmax; ++q2)
    for (int q1 = -kmax; q1 <= kmax; ++q1) {
      if (periodic && q1 == 0 && q2 == 0) continue;
      modes_.push_back({q1, q2});
      index_.push_back(static_cast<size_t>(wrap(q2, N)) * N + wrap(q1, N));
      const double w1 = q1 + kappa_(0), w2 = q2 + kappa_(1);
      const double g = kTwoPi * kTwoPi * (w1 * w1 + w2 * w2);
      gram.push_back(g);
      gram.push_back(g);
    }
  gram_ = Eigen::Map<Eigen::VectorXd>(gram.data(), static_cast<Eigen::Index>(gram.size()));
}

BlochOperator::~BlochOperator() = default;

CVector BlochOperator::apply(const CVector& w) const {
  const int N = fft_->N;
  const size_t count = static_cast<size_t>(N) * N;
  cplx* h = as_cplx(fft_->spec.get());
  const cplx i2pi(0.0, kTwoPi);
  for (int c = 0; c < 3; ++c) {
    std::fill(h, h + count, cplx(0.0));
    for (size_t j = 0; j < modes_.size(); ++j) {
      const auto S = strain_symbol(modes_[j].k1 + kappa_(0), modes_[j].k2 + kappa_(1));
      h[index_[j]] = i2pi * (S(c, 0) * w(2 * j) + S(c, 1) * w(2 * j + 1));
    }
    fft_->backward.execute();
    eps_[c].assign(h, h + count);
  }
  coeff_.stress(eps_, sig_);

  const double scale = 1.0 / static_cast<double>(count);
  const cplx mi2pi(0.0, -kTwoPi);
  CVector r = CVector::Zero(size());
  for (int c = 0; c < 3; ++c) {
    std::copy(sig_[c].begin(), sig_[c].end(), h);
    fft_->forward.execute();
    for (size_t j = 0; j < modes_.size(); ++j) {
      const auto S = strain_symbol(modes_[j].k1 + kappa_(0), modes_[j].k2 + kappa_(1));
      const cplx s = h[index_[j]] * scale;
      r(2 * j) += mi2pi * S(c, 0) * s;
      r(2 * j + 1) += mi2pi * S(c, 1) * s;
    }
  }
  return r;
}

CVector BlochOperator::precondition(const CVector& r) const {
  CVector z(r.size());
  for (size_t j = 0; j < modes_.size(); ++j) {
    const Mat2 P = reference_inverse(reference_, modes_[j].k1 + kappa_(0), modes_[j].k2 + kappa_(1));
    z(2 * j) = P(0, 0) * r(2 * j) + P(0, 1) * r(2 * j + 1);
    z(2 * j + 1) = P(1, 0) * r(2 * j) + P(1, 1) * r(2 * j + 1);
  }
  return z;
}

// ---------------------------------------------------------------------------

std::vector<Mat2> periodic_gradient(int n, std::span<const double> v1, std::span<const double> v2) {
  const size_t count = static_cast<size_t>(n) * n;
  if (v1.size() != count || v2.size() != count)
    throw std::invalid_argument("periodic_gradient: field size mismatch");
  const int kmax = max_frequency(n);
  auto f = FftPlans::complex_grid(n);
  cplx* h = as_cplx(f->spec.get());
  std::vector<Mat2> G(count, Mat2::Zero());
  const std::span<const double> comps[2] = {v1, v2};
  for (int i = 0; i < 2; ++i) {
    std::vector<cplx> vhat(count);
    std::copy(comps[i].begin(), comps[i].end(), h);
    f->forward.execute();
    std::copy(h, h + count, vhat.begin());
    for (int j = 0; j < 2; ++j) {
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          const int k1 = c <= n / 2 ? c : c - n;
          const int k2 = r <= n / 2 ? r : r - n;
          const size_t idx = static_cast<size_t>(r) * n + c;
          if (std::abs(k1) > kmax || std::abs(k2) > kmax) {
            h[idx] = 0.0;
          } else {
            h[idx] = vhat[idx] * cplx(0.0, kTwoPi * (j == 0 ? k1 : k2)) / static_cast<double>(count);
          }
        }
      f->backward.execute();
      for (size_t p = 0; p < count; ++p) G[p](i, j) = h[p].real();
    }
  }
  return G;
}

std::vector<double> synthesize(int n, std::span<const Mode> modes, const CVector& coeffs, int component) {
  auto f = FftPlans::real_grid(n);
  cplx* h = as_cplx(f->spec.get());
  const size_t half = f->half();
  // Evaluate at the cell centers, a quarter cell past the frame grid points.
  const double delta = 0.25 / n;
  for (size_t j = 0; j < modes.size(); ++j) {
    const cplx a = coeffs(2 * j + component) * std::polar(1.0, kTwoPi * delta * (modes[j].k1 + modes[j].k2));
    h[static_cast<size_t>(wrap(modes[j].k2, n)) * half + modes[j].k1] = a;
    if (modes[j].k1 == 0) h[static_cast<size_t>(wrap(-modes[j].k2, n)) * half] = std::conj(a);
  }
  f->backward.execute();
  return {f->real.get(), f->real.get() + static_cast<size_t>(n) * n};
}

}  // namespace isohom::spectral
