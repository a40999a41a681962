#include "isohom/coercivity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "isohom/spectral.hpp"

namespace isohom {

using spectral::BlochOperator;
using spectral::cplx;
using spectral::CVector;

namespace {

using CMatrix = Eigen::MatrixXcd;

CMatrix apply_block(const BlochOperator& op, const CMatrix& X) {
  CMatrix Y(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) Y.col(j) = op.apply(X.col(j));
  return Y;
}

CMatrix precondition_block(const BlochOperator& op, const CMatrix& R) {
  CMatrix Z(R.rows(), R.cols());
  for (Eigen::Index j = 0; j < R.cols(); ++j) Z.col(j) = op.precondition(R.col(j));
  return Z;
}

// Columns of T span the same space as S with T^H B T = I, dropping directions
// whose Gram eigenvalue falls below drop * max.
CMatrix svqb(const CMatrix& gram_bs, double drop) {
  const Eigen::VectorXd d = gram_bs.diagonal().real().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  CMatrix G = d.asDiagonal() * gram_bs * d.asDiagonal();
  G = 0.5 * (G + G.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(G);
  const Eigen::VectorXd& theta = es.eigenvalues();
  const double cut = drop * theta.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (theta(i) > cut) keep.push_back(i);
  CMatrix T(gram_bs.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c)
    T.col(static_cast<Eigen::Index>(c)) = d.asDiagonal() * es.eigenvectors().col(keep[c]) / std::sqrt(theta(keep[c]));
  return T;
}

struct Lobpcg {
  double value;
  double residual;
  int iterations;
};

double b_inverse_norm(const CVector& r, const Eigen::VectorXd& gram) {
  return std::sqrt((r.array().abs2() / gram.array()).sum());
}

// Smallest eigenpair of A v = L B v with B = diag(gram), by locally optimal
// block preconditioned conjugate gradients.
Lobpcg smallest_eigenvalue(const BlochOperator& op, const EigenOptions& opts) {
  const Eigen::VectorXd& gram = op.gram();
  const Eigen::Index N = op.size();
  const Eigen::Index bs = std::clamp<Eigen::Index>(opts.block_size, 1, std::max<Eigen::Index>(1, N / 3));

  std::mt19937_64 rng(0x5eed1234u);
  std::normal_distribution<double> normal;
  CMatrix X(N, bs);
  for (Eigen::Index j = 0; j < bs; ++j)
    for (Eigen::Index i = 0; i < N; ++i) {
      const double re = normal(rng), im = normal(rng);
      X(i, j) = cplx(re, im) / gram(i);
    }

  CMatrix AX = apply_block(op, X);
  CMatrix P, AP;
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(bs, std::numeric_limits<double>::infinity());
  double previous = std::numeric_limits<double>::infinity();

  for (int it = 0; it <= opts.max_iter; ++it) {
    // Rayleigh-Ritz on span[X, W, P].
    const Eigen::Index w_cols = it == 0 ? 0 : bs;
    CMatrix S(N, X.cols() + w_cols + P.cols());
    CMatrix AS(N, S.cols());
    S.leftCols(X.cols()) = X;
    AS.leftCols(X.cols()) = AX;
    if (it > 0) {
      CMatrix R = AX - gram.asDiagonal() * X * lambda.head(X.cols()).asDiagonal();
      CMatrix W = precondition_block(op, R);
      S.middleCols(X.cols(), w_cols) = W;
      AS.middleCols(X.cols(), w_cols) = apply_block(op, W);
      if (P.cols() > 0) {
        S.rightCols(P.cols()) = P;
        AS.rightCols(P.cols()) = AP;
      }
    }
    const CMatrix BS = gram.asDiagonal() * S;
    const CMatrix T = svqb(S.adjoint() * BS, 1e-13);
    CMatrix H = T.adjoint() * (S.adjoint() * AS) * T;
    H = 0.5 * (H + H.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
    const Eigen::Index keep = std::min<Eigen::Index>(bs, es.eigenvalues().size());
    const CMatrix Y = T * es.eigenvectors().leftCols(keep);

    CMatrix Xn = S * Y;
    CMatrix AXn = AS * Y;
    const Eigen::Index tail = S.cols() - X.cols();
    if (tail > 0) {
      P = S.rightCols(tail) * Y.bottomRows(tail);
      AP = AS.rightCols(tail) * Y.bottomRows(tail);
    }
    X = std::move(Xn);
    AX = std::move(AXn);
    lambda = es.eigenvalues().head(keep);

    // Convergence of the lowest pair, confirmed with a fresh operator application.
    const double value = lambda(0);
    const CVector r0 = AX.col(0) - value * gram.asDiagonal() * X.col(0).eval();
    double res = b_inverse_norm(r0, gram);
    if (std::abs(value - previous) <= opts.eig_tol && res <= opts.eig_tol) {
      const CVector x0 = X.col(0);
      const CVector ax0 = op.apply(x0);
      const double bnorm2 = (x0.array().abs2() * gram.array()).sum();
      const double rq = x0.dot(ax0).real() / bnorm2;
      res = b_inverse_norm(ax0 - rq * gram.asDiagonal() * x0, gram) / std::sqrt(bnorm2);
      if (res <= opts.eig_tol && std::abs(rq - value) <= opts.eig_tol) return {rq, res, it};
      AX = apply_block(op, X);
    }
    previous = value;
  }
  throw EigenSolveError("eigensolver did not converge within " + std::to_string(opts.max_iter) +
                        " iterations (last estimate " + std::to_string(previous) + ")");
}

Microstructure at_resolution(const Microstructure& m, int n) {
  if (n < 8) throw std::invalid_argument("coercivity: resolution must be at least 8");
  if (n % m.n() != 0)
    throw std::invalid_argument("coercivity: resolution " + std::to_string(n) +
                                " is not a multiple of the raster size " + std::to_string(m.n()));
  return n == m.n() ? m : m.upsampled(n / m.n());
}

void check_options(const EigenOptions& opts) {
  if (!(opts.eig_tol > 0.0)) throw std::invalid_argument("coercivity: eig_tol must be positive");
  if (opts.max_iter < 1) throw std::invalid_argument("coercivity: max_iter must be positive");
}

double reduce_to_zone(double k) {
  double r = k - std::floor(k);
  if (r >= 0.5) r -= 1.0;
  return r;
}

}  // namespace

EigenResult lambda_per(const Microstructure& m, int n, const EigenOptions& opts) {
  check_options(opts);
  const Microstructure mm = at_resolution(m, n);
  const BlochOperator op(mm, Vec2::Zero(), opts.reference.value_or(spectral::default_reference(mm)));
  const Lobpcg r = smallest_eigenvalue(op, opts);
  return {r.value, r.residual, r.iterations};
}

BlochSample bloch_quotient(const Microstructure& m, int n, Vec2 k, const EigenOptions& opts) {
  check_options(opts);
  const Microstructure mm = at_resolution(m, n);
  const Vec2 kappa(reduce_to_zone(k(0)), reduce_to_zone(k(1)));
  const BlochOperator op(mm, kappa, opts.reference.value_or(spectral::default_reference(mm)));
  const Lobpcg r = smallest_eigenvalue(op, opts);
  return {k, r.value, r.residual, r.iterations};
}

BlochSweep bloch_sweep(const Microstructure& m, int n, int k_grid, const EigenOptions& opts) {
  if (k_grid < 2) throw std::invalid_argument("bloch_sweep: k_grid must be at least 2");
  BlochSweep sweep;
  sweep.lambda_bloch_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k_grid; ++i)
    for (int j = 0; j < k_grid; ++j) {
      const Vec2 k(static_cast<double>(i) / k_grid, static_cast<double>(j) / k_grid);
      sweep.samples.push_back(bloch_quotient(m, n, k, opts));
      sweep.lambda_bloch_min = std::min(sweep.lambda_bloch_min, sweep.samples.back().lambda_k);
    }
  return sweep;
}

ComparisonCertificate comparison_certificate(const Microstructure& m) {
  const std::size_t cells = static_cast<std::size_t>(m.n()) * m.n();
  const std::size_t ones = m.phase1_cells();
  std::vector<IsotropicModuli> present;
  if (ones > 0) present.push_back(m.phase1());
  if (ones < cells) present.push_back(m.phase2());

  ComparisonCertificate c;
  const double mu = m.phase1().mu;
  double kmin = std::numeric_limits<double>::infinity();
  for (const auto& p : present) kmin = std::min(kmin, p.bulk());
  c.underline_moduli = {kmin - mu, mu};
  const Tensor4 under = Tensor4::isotropic(c.underline_moduli);
  c.underline_rank_one_min = std::min(c.underline_moduli.mu, c.underline_moduli.lambda + 2.0 * c.underline_moduli.mu);

  double scale = under.mandel().norm();
  c.min_gap_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& p : present) {
    const Tensor4 L = Tensor4::isotropic(p);
    scale = std::max(scale, L.mandel().norm());
    c.min_gap_eigenvalue = std::min(c.min_gap_eigenvalue, min_eigenvalue(L - under));
  }
  const double tol = 1e-12 * std::max(1.0, scale);
  c.comparison_psd = c.min_gap_eigenvalue >= -tol && c.underline_rank_one_min >= -tol;
  return c;
}

CoercivityReport assess_coercivity(const Microstructure& m, int n, std::optional<int> k_grid,
                                   const EigenOptions& opts) {
  CoercivityReport r;
  r.resolution = n;
  r.lambda_per = lambda_per(m, n, opts);
  if (k_grid) r.bloch = bloch_sweep(m, n, *k_grid, opts);
  r.certificate = comparison_certificate(m);
  return r;
}

nlohmann::ordered_json to_json(const ComparisonCertificate& c) {
  nlohmann::ordered_json j;
  j["comparison_psd"] = c.comparison_psd;
  j["underline_moduli"] = to_json(c.underline_moduli);
  j["underline_rank_one_min"] = c.underline_rank_one_min;
  j["min_gap_eigenvalue"] = c.min_gap_eigenvalue;
  return j;
}

nlohmann::ordered_json to_json(const CoercivityReport& r) {
  nlohmann::ordered_json j;
  j["resolution"] = r.resolution;
  j["lambda_per"] = r.lambda_per.value;
  j["lambda_per_residual"] = r.lambda_per.residual;
  j["lambda_per_iterations"] = r.lambda_per.iterations;
  if (r.bloch) {
    auto samples = nlohmann::ordered_json::array();
    for (const auto& s : r.bloch->samples) {
      nlohmann::ordered_json e;
      e["k"] = {s.k(0), s.k(1)};
      e["lambda_k"] = s.lambda_k;
      e["residual"] = s.residual;
      e["iterations"] = s.iterations;
      samples.push_back(std::move(e));
    }
    j["bloch_samples"] = std::move(samples);
    j["lambda_bloch_min"] = r.bloch->lambda_bloch_min;
    // The sampled minimum bounds the whole-space constant from above only.
    j["lambda_bloch_min_kind"] = "upper_bound_estimate";
  }
  j["certificate"] = to_json(r.certificate);
  return j;
}

}  // namespace isohom
