#include "apps_internal.hpp"

#include "sqla/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sqla::apps {

using detail::clamp_count;

Mat DiscriminantResult::dense_u() const {
  Mat u(static_cast<Eigen::Index>(b_rur.dim()), coeffs.cols());
  for (Eigen::Index i = 0; i < coeffs.cols(); ++i) u.col(i) = b_rur.R.adjoint_times(coeffs.col(i));
  return u;
}

Mat discriminant_dense_operator(const Mat& b, const Mat& w, double sigma) {
  const ScalarFunction fs = fn::thresholded_sqrt(sigma);
  const ScalarFunction fi = fn::thresholded_recip(sigma);
  const Mat sb = oracle::dense_even_svt(b, [&](double x) { return fs(x); });
  const Mat sw = oracle::dense_even_svt(w, [&](double x) { return fi(x); });
  return sb * sw * sb;
}

DiscriminantResult discriminant_analysis(const OversampledMatrix& b, const OversampledMatrix& w, double sigma,
                                         double eps, double delta, const DiscriminantOptions& opt, Rng& rng) {
  require(sigma > 0.0, "discriminant_analysis: sigma must be positive");
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "discriminant_analysis: need eps > 0 and delta in (0,1)");
  require(b.cols() == w.cols(), "discriminant_analysis: B and W need the same number of columns");
  const double bn = detail::spectral_or_estimate(b, opt.b_norm, rng);
  const double wn = detail::spectral_or_estimate(w, opt.w_norm, rng);
  require(eps * bn < sigma, "discriminant_analysis: need eps < sigma/||B||");

  DiscriminantResult out;
  Guarantee& g = out.guarantee;
  g.pipeline = "discriminant_analysis";
  g.eps = eps;
  g.delta = delta;
  g.bound = eps * bn * bn / (sigma * sigma);
  g.bound_kind = "||fsqrt(S_B) finv(S_W) fsqrt(S_B) U - U D||";
  out.alpha_bound = eps * sigma / bn;

  SvtOptions sb = opt.b_svt;
  sb.eps = eps * bn;
  sb.delta = delta / 3;
  sb.spectral_norm = bn;
  out.b_rur = even_svt(b, fn::thresholded_sqrt(sigma), sb, rng);
  SvtOptions sw = opt.w_svt;
  sw.eps = eps / (sigma * sigma);
  sw.delta = delta / 3;
  sw.spectral_norm = wn;
  out.w_rur = even_svt(w, fn::thresholded_recip(sigma), sw, rng);
  const RurDecomposition& rb = out.b_rur;
  const RurDecomposition& rw = out.w_rur;

  // trimmed factor of C_B at sigma/sqrt2
  const SmallSvd& cb = rb.svd;
  const double cut = sigma / std::sqrt(2.0);
  Eigen::Index k = 0;
  while (k < cb.s.size() && cb.s[k] >= cut) ++k;
  g.seeds = {rb.seed, rw.seed};
  g.sizes = {{"r_b", rb.r()}, {"c_b", rb.c()}, {"r_w", rw.r()}, {"c_w", rw.c()}, {"k", static_cast<index_t>(k)}};
  if (k == 0) {
    out.empty = true;
    return out;
  }

  // R_B R_W^dagger ~ R_B' R_W'^dagger over a joint column sketch
  const double e = eps * std::pow(sigma, 1.5) * std::sqrt(bn) /
                   std::sqrt(rb.R.bound_frob2() * rw.R.bound_frob2());
  const index_t cap = std::max(sb.max_size, sw.max_size);
  const index_t cp = opt.cprime ? opt.cprime
                                : clamp_count(opt.cprime_constant *
                                                  static_cast<double>(joint_matmul_size(1.0, 1.0, e, delta / 3)),
                                              1, cap);
  const RowSketch t = draw_joint_sketch(rb.R.column_dist(), rw.R.column_dist(), cp, rng);
  g.sizes["cprime"] = cp;

  // Z_B U_k = U_k diag(fbar_B) on the kept directions, so
  // Sigma_k U_k^dagger Z U_k Sigma_k = G^dagger Z_W G with G = R_W' R_B'^dagger U_k diag(fbar_B) Sigma_k
  const Mat uk = cb.u.leftCols(k);
  const RVec sk = cb.s.head(k);
  Vec fb(k);
  for (Eigen::Index i = 0; i < k; ++i) fb[i] = (rb.fbar_shift[i] + rb.fbar0) * sk[i];
  const Mat gm = rw.R.core_times(t, rb.R.core_adjoint_times(t, uk) * fb.asDiagonal());
  Mat zg(gm.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) zg.col(i) = rw.core_apply(gm.col(i));
  Mat core = gm.adjoint() * zg;
  core = 0.5 * (core + core.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(core);
  const RVec lam = es.eigenvalues();
  const Mat wv = es.eigenvectors();
  std::vector<Eigen::Index> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return lam[x] > lam[y]; });

  const Mat base = uk * sk.cwiseInverse().cast<cplx>().asDiagonal();
  out.D.resize(k);
  out.coeffs.resize(uk.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index o = order[static_cast<size_t>(i)];
    out.D[i] = lam[o];
    out.coeffs.col(i) = base * wv.col(o);
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    detail::RowTerms terms;
    terms.add_rows(b, rb.R.sketch(), out.coeffs.col(i));
    out.U.push_back(terms.combine());
  }
  return out;
}

}  // namespace sqla::apps
