#include "sqla/svt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sqla {

Mat EigenDecompApprox::isometry() const {
  if (rank() == 0) return Mat::Zero(0, static_cast<Eigen::Index>(R.cols()));
  return N * R.dense();
}

double EigenDecompApprox::isometry_error() const {
  if (rank() == 0) return 0.0;
  const Mat q = isometry();
  const auto k = q.rows();
  return (q * q.adjoint() - Mat::Identity(k, k)).operatorNorm();
}

Mat EigenDecompApprox::dense_operator() const {
  const auto n = static_cast<Eigen::Index>(R.cols());
  Mat out = Mat::Identity(n, n) * f0;
  if (rank() == 0) return out;
  const Mat q = isometry();
  out += q.adjoint() * D.cast<cplx>().asDiagonal() * q;
  return out;
}

Mat EigenDecompApprox::dense_operator(const ScalarFunction& g) const {
  const auto n = static_cast<Eigen::Index>(R.cols());
  const cplx g0 = g.f0();
  Mat out = Mat::Identity(n, n) * g0;
  if (rank() == 0) return out;
  Vec d(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) d[i] = g(lambda[i]) - g0;
  const Mat q = isometry();
  out += q.adjoint() * d.asDiagonal() * q;
  return out;
}

EigenDecompApprox eigen_transform(const OversampledMatrix& a, const ScalarFunction& f, double eps, double delta,
                                  const EigenOptions& opt, Rng& rng) {
  require(eps > 0.0, "eigen_transform: eps must be positive");
  require(delta > 0.0 && delta <= 1.0, "eigen_transform: delta must lie in (0,1]");
  require(opt.L > 0.0, "eigen_transform: L must be positive");
  check_hermitian(a, opt.hermitian_probes, rng);
  double spec = opt.spectral_norm > 0.0 ? opt.spectral_norm : opt.svt.spectral_norm;
  if (spec <= 0.0) spec = estimate_spectral_norm(a, rng);
  require(eps <= opt.L * spec * (1 + 1e-12) || f.constant, "eigen_transform: eps must not exceed L ||A||");
  require(!(opt.d <= eps / opt.L), "eigen_transform: validity radius d must exceed eps/L");

  EigenDecompApprox out;
  out.f0 = f.f0();
  out.eps = eps;
  out.delta = delta;
  const double el = eps / opt.L;
  out.isometry_bound = std::pow(el / spec, 3);

  // smooth projector onto eigenvalues with lambda^2 above (eps/L)^2
  ScalarFunction pi = fn::ramp(0.5 * el * el, el * el);
  SvtOptions so = opt.svt;
  so.eps = std::min(1.0, el / spec);
  so.delta = delta / 3;
  so.spectral_norm = spec;
  out.projector = even_svt(a, pi, so, rng);
  const RurDecomposition& p = out.projector;
  out.R = p.R;
  out.S = p.R.sketch();
  if (f.constant) return out;

  const double thr = el / std::sqrt(2.0);
  Eigen::Index k = 0;
  while (k < p.svd.s.size() && p.svd.s[k] >= thr && p.svd.s[k] > 0.0) ++k;
  if (k == 0) return out;

  // M ~ R A R^dagger from one shared pool of entry samples
  const index_t r = p.r();
  index_t per = opt.pool_per_mean, groups = opt.pool_groups;
  if (per == 0) {
    const double tau = std::pow(el, 3) / static_cast<double>(r);
    const double rn2 = p.R.bound_frob2() / static_cast<double>(r);
    per = static_cast<index_t>(
        std::min(1e8, std::ceil(opt.pool_constant * 8.0 * a.bound_frob2() * rn2 * rn2 / (tau * tau))));
  }
  if (groups == 0) groups = static_cast<index_t>(std::ceil(8.0 * std::log(3.0 * r * r / delta)));
  EntryPool pool(a, per, groups, rng);
  out.pool_samples = per * groups;
  const SketchedMatrix& rm = p.R;
  auto xcol = [&](index_t j) {
    Vec c(static_cast<Eigen::Index>(r));
    for (index_t i = 0; i < r; ++i) c[static_cast<Eigen::Index>(i)] = rm.R(i, j);
    return c;
  };
  auto ycol = [&](index_t j) -> Vec { return xcol(j).conjugate(); };
  Mat m = pool.estimate_block(r, xcol, r, ycol);
  m = 0.5 * (m + m.adjoint());

  const Mat uk = p.svd.u.leftCols(k);
  RVec scale(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double d = p.svd.s[i];
    scale[i] = pi(d * d).real() / d;  // d pibar(d^2)
  }
  Mat core = scale.cast<cplx>().asDiagonal() * (uk.adjoint() * m * uk) * scale.cast<cplx>().asDiagonal();
  core = 0.5 * (core + core.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(core);
  const RVec lam = es.eigenvalues();
  const Mat w = es.eigenvectors();
  const RVec dinv = p.svd.s.head(k).cwiseInverse();
  const Mat n = w.adjoint() * dinv.cast<cplx>().asDiagonal() * uk.adjoint();

  RVec fd(k);
  for (Eigen::Index i = 0; i < k; ++i) fd[i] = (f(lam[i]) - out.f0).real();
  std::vector<Eigen::Index> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return fd[x] > fd[y]; });
  out.N.resize(k, static_cast<Eigen::Index>(r));
  out.D.resize(k);
  out.lambda.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index o = order[static_cast<size_t>(i)];
    out.N.row(i) = n.row(o);
    out.D[i] = fd[o];
    out.lambda[i] = lam[o];
  }
  return out;
}

}  // namespace sqla
