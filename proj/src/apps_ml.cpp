#include "apps_internal.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace sqla::apps {

using detail::clamp_count;
using detail::frob2_of;
using detail::log_inv;
using detail::norm2_of;

// ---------------------------------------------------------------------------
// recommendation

RecommendResult recommend(std::shared_ptr<const SqMatrix> a, index_t i, const ThresholdSpec& spec, double eps,
                          double delta, const RecommendOptions& opt, Rng& rng) {
  validate(spec);
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "recommend: need eps > 0 and delta in (0,1)");
  require(i < a->rows(), "recommend: row index out of range");
  require(a->row_norm2(i) > 0.0, ErrorKind::ZeroNorm, "recommend: row i is zero");
  const OversampledMatrix acc = OversampledMatrix::exact(a);

  RecommendResult out;
  SvtOptions so = opt.svt;
  so.eps = eps;
  so.delta = delta / 3;
  out.rur = even_svt(acc, fn::step(spec.sigma, spec.eta), so, rng);
  const RurDecomposition& rur = out.rur;

  // A'(i,.) = A(i,.) S'^dagger S' from samples of row i
  const double k_ratio = a->frob2() / (spec.sigma * spec.sigma);
  const index_t rp = opt.row_samples
                         ? opt.row_samples
                         : clamp_count(opt.row_constant * k_ratio * log_inv(delta / 3) / (eps * eps), 1, 1 << 16);
  RowDist row;
  row.n = a->cols();
  row.sample = [a, i](Rng& r) { return a->sample_in_row(i, r); };
  row.prob = [a, i](index_t j) { return abs2(a->query(i, j)) / a->row_norm2(i); };
  out.row_sketch = draw_row_sketch(row, rp, rng);
  const RowSketch& sp = out.row_sketch;

  const auto r = static_cast<Eigen::Index>(rur.r());
  Vec y = Vec::Zero(r);
  for (index_t l = 0; l < sp.size(); ++l) {
    const index_t j = sp.idx[l];
    const cplx aij = a->query(i, j) * sp.weight[l] * sp.weight[l];
    for (Eigen::Index k = 0; k < r; ++k) y[k] += aij * std::conj(rur.R.R(static_cast<index_t>(k), j));
  }
  // U is Hermitian for the real step function, so U^T y = conj(U conj(y))
  out.x = rur.core_apply(y.conjugate()).conjugate();

  Guarantee& g = out.guarantee;
  g.pipeline = "recommend";
  g.eps = eps;
  g.delta = delta;
  g.seeds = {rur.seed};
  g.sizes = {{"r", rur.r()}, {"c", rur.c()}, {"row_samples", rp}};
  g.bound = eps * std::sqrt(a->frob2());
  g.bound_kind = "||Ahat - A_{sigma,eta}||_F";

  if (out.x.norm() == 0.0) {
    out.empty = true;
    return out;
  }
  // x R as the conjugate of R^dagger conj(x)
  detail::RowTerms terms;
  terms.add_rows(acc, rur.R.sketch(), out.x.conjugate());
  out.row = terms.combine().conj();

  index_t rounds = opt.max_rounds;
  if (rounds == 0) {
    // ||x R||^2 ~ x C C^dagger x^dagger
    const Vec xc = rur.core_adjoint(out.x.conjugate());
    const double proxy = xc.squaredNorm();
    const double phi = proxy > 0.0 ? std::max(1.0, out.row->bound_norm2() / proxy) : 1e6;
    rounds = rejection_rounds(2.0 * phi, delta / 3);
  }
  const RejectionOutcome ro = rejection_sample(*out.row, rounds, rng);
  out.sample = ro.index;
  out.rounds = ro.rounds;
  return out;
}

// ---------------------------------------------------------------------------
// supervised clustering

CentroidInstance centroid_instance(const Vec& p, const std::vector<Vec>& qs) {
  require(!qs.empty(), "centroid_instance: need at least one cluster point");
  const auto d = p.size();
  const auto n = static_cast<Eigen::Index>(qs.size() + 1);
  CentroidInstance out;
  out.M.resize(n, d);
  out.w.resize(n);
  require(p.norm() > 0.0, "centroid_instance: p must be nonzero");
  out.M.row(0) = p.transpose() / p.norm();
  out.w[0] = p.norm();
  const double s = std::sqrt(static_cast<double>(qs.size()));
  for (size_t t = 0; t < qs.size(); ++t) {
    require(qs[t].size() == d, "centroid_instance: dimension mismatch");
    const double qn = qs[t].norm();
    require(qn > 0.0, "centroid_instance: cluster points must be nonzero");
    const auto row = static_cast<Eigen::Index>(t + 1);
    out.M.row(row) = -qs[t].transpose() / (qn * s);
    out.w[row] = qn / s;
  }
  return out;
}

namespace {

// u = M (x) m flattened as ((i d) + j) n + k
class TensorSampler final : public VectorSampler {
 public:
  explicit TensorSampler(std::shared_ptr<const SqMatrix> m) : m_(std::move(m)) {}
  index_t size() const override { return m_->rows() * m_->cols() * m_->rows(); }
  cplx query(index_t t) const override {
    const index_t n = m_->rows(), d = m_->cols();
    const index_t k = t % n, j = (t / n) % d, i = t / (n * d);
    return m_->query(i, j) * std::sqrt(m_->row_norm2(k));
  }
  index_t sample(Rng& rng) const override {
    const index_t n = m_->rows(), d = m_->cols();
    const index_t i = m_->sample_row(rng);
    const index_t j = m_->sample_in_row(i, rng);
    const index_t k = m_->sample_row(rng);
    return (i * d + j) * n + k;
  }
  double norm2() const override { return m_->frob2() * m_->frob2(); }

 private:
  std::shared_ptr<const SqMatrix> m_;
};

}  // namespace

CentroidResult centroid_distance(std::shared_ptr<const SqMatrix> m, const Vec& w, double eps, double delta,
                                 Rng& rng) {
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "centroid_distance: need eps > 0 and delta in (0,1)");
  require(static_cast<index_t>(w.size()) == m->rows(), "centroid_distance: weight length mismatch");
  const index_t n = m->rows(), d = m->cols();
  OversampledVector u;
  auto ts = std::make_shared<TensorSampler>(m);
  u.bound = ts;
  u.entry = [ts](index_t t) { return ts->query(t); };
  u.norm2 = ts->norm2();
  auto v = [m, w, n, d](index_t t) -> cplx {
    const index_t k = t % n, j = (t / n) % d, i = t / (n * d);
    const double mk = std::sqrt(m->row_norm2(k));
    if (mk == 0.0) return 0.0;
    return std::conj(w[static_cast<Eigen::Index>(i)]) * w[static_cast<Eigen::Index>(k)] * m->query(k, j) / mk;
  };
  const double w2 = w.squaredNorm();
  CentroidResult out;
  out.estimate = inner_product_estimate(u, v, w2 * w2, eps, delta, rng).real();
  const auto plan = inner_product_plan(u.bound_norm2(), w2 * w2, eps, delta);
  out.samples = plan.per_mean * plan.groups;
  Guarantee& g = out.guarantee;
  g.pipeline = "centroid_distance";
  g.eps = eps;
  g.delta = delta;
  g.sizes = {{"samples", out.samples}};
  g.bound = eps;
  g.bound_kind = "|estimate - ||wM||^2|";
  return out;
}

// ---------------------------------------------------------------------------
// principal component analysis

PcaResult pca(std::shared_ptr<const SqMatrix> x, index_t k, double eta_gap, double eps, double delta,
              const PcaOptions& opt, Rng& rng) {
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "pca: need eps > 0 and delta in (0,1)");
  require(eta_gap > 0.0 && eta_gap <= 1.0, "pca: the gap parameter must lie in (0,1]");
  PcaResult out;
  Guarantee& g = out.guarantee;
  g.pipeline = "pca";
  g.eps = eps;
  g.delta = delta;
  if (k == 0) return out;
  const OversampledMatrix acc = OversampledMatrix::exact(x);
  const double frob2 = x->frob2();
  const double spec = detail::spectral_or_estimate(acc, opt.spectral_norm, rng);
  const double s2 = spec * spec;
  double lam_k = opt.lambda_k;
  if (lam_k <= 0.0) {
    const RVec sv = estimate_singular_values(acc, 64, 64, rng);
    require(static_cast<index_t>(sv.size()) >= k, ErrorKind::Degenerate, "pca: fewer than k singular values found");
    lam_k = sv[static_cast<Eigen::Index>(k - 1)] * sv[static_cast<Eigen::Index>(k - 1)];
  }
  const double gap = eta_gap * s2;
  const double li = std::log(static_cast<double>(k) / delta);
  SvtOptions so = opt.svt;
  so.eps = eps;
  so.delta = delta;
  so.check_radius = false;
  so.spectral_norm = spec;
  if (so.r == 0)
    so.r = clamp_count(so.r_constant * frob2 * li / (eta_gap * eta_gap * s2 * eps * eps), so.min_size, so.max_size);
  if (so.c == 0)
    so.c = clamp_count(so.c_constant * s2 * frob2 * li / (eta_gap * eta_gap * lam_k * lam_k * eps * eps), so.min_size,
                       so.max_size);
  out.base = even_svt(acc, fn::identity(), so, rng);
  const SmallSvd& sv = out.base.svd;
  require(static_cast<index_t>(sv.s.size()) >= k, ErrorKind::Degenerate, "pca: sketch has fewer than k directions");

  const auto r = static_cast<Eigen::Index>(out.base.r());
  const auto kk = static_cast<Eigen::Index>(k);
  out.lambda.resize(kk);
  out.coeffs = Mat::Zero(r, kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const double lam = sv.s[i] * sv.s[i];
    out.lambda[i] = lam;
    require(lam > gap / 4, ErrorKind::Degenerate, "pca: eigenvalue estimate inside the window around zero");
    const ScalarFunction f = fn::window(lam, gap);
    Eigen::Index hit = -1;
    int count = 0;
    double weight = 0.0;
    for (Eigen::Index j = 0; j < sv.s.size(); ++j) {
      const double fb = f.fbar(sv.s[j] * sv.s[j]).real();
      if (fb != 0.0) {
        ++count;
        hit = j;
        weight = fb;
      }
    }
    if (count != 1) fail(ErrorKind::Degenerate, "pca: window around an eigenvalue estimate is not rank one");
    out.coeffs.col(i) = std::sqrt(weight) * sv.u.col(hit);
    detail::RowTerms terms;
    terms.add_rows(acc, out.base.R.sketch(), out.coeffs.col(i));
    out.vectors.push_back(terms.combine());
  }
  g.seeds = {out.base.seed};
  g.sizes = {{"r", out.base.r()}, {"c", out.base.c()}, {"k", k}};
  g.bound = eps;
  g.bound_kind = "||vhat_i - v_i|| and sum |lambdahat_i - lambda_i| / Tr(X^dagger X)";
  return out;
}

// ---------------------------------------------------------------------------
// regression

RegressionResult solve_regularized(const OversampledMatrix& a, const OversampledVector& b, const ThresholdSpec& spec,
                                   double eps, double delta, const RegressionOptions& opt, Rng& rng) {
  validate(spec);
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "solve_regularized: need eps > 0 and delta in (0,1)");
  require(b.size() == a.rows(), "solve_regularized: b has the wrong length");
  const double frob2 = frob2_of(a);
  const double spec_norm = detail::spectral_or_estimate(a, opt.spectral_norm, rng);
  const double b_norm = std::sqrt(norm2_of(b));
  const double sig2 = spec.sigma * spec.sigma;
  const double kk = frob2 / sig2, kappa = spec_norm * spec_norm / sig2;
  const double phi = a.phi_known() && std::isfinite(a.phi()) ? a.phi() : 1.0;

  RegressionResult out;
  SvtOptions so = opt.svt;
  so.eps = eps / (spec_norm * spec_norm);
  so.delta = delta / 2;
  so.spectral_norm = spec_norm;
  out.rur = even_svt(a, fn::thresholded_inverse(spec.sigma, spec.eta), so, rng);
  const RurDecomposition& rur = out.rur;
  const index_t r = rur.r();

  // conj(u)^T = b^dagger A conj(R)^T from one pool of entry samples
  index_t per = opt.pool_per_mean, groups = opt.pool_groups;
  if (per == 0) per = clamp_count(opt.pool_constant * 8.0 * phi * kk * kk * kappa / (eps * eps), 1, 10000000);
  if (groups == 0) groups = clamp_count(8.0 * std::log(2.0 * static_cast<double>(r) / delta), 1, 1000);
  EntryPool pool(a, per, groups, rng);
  auto xcol = [&](index_t i) {
    Vec c(1);
    c[0] = std::conj(b.query(i));
    return c;
  };
  // rows of R repeat rows of A, so estimate b^dagger A A(i,.)^dagger once per distinct i
  const RowSketch& sk = rur.R.sketch();
  std::map<index_t, index_t> pos;
  std::vector<index_t> distinct;
  for (index_t i : sk.idx)
    if (pos.emplace(i, distinct.size()).second) distinct.push_back(i);
  auto ycol = [&](index_t j) {
    Vec c(static_cast<Eigen::Index>(distinct.size()));
    for (size_t k = 0; k < distinct.size(); ++k) c[static_cast<Eigen::Index>(k)] = std::conj(a.query(distinct[k], j));
    return c;
  };
  const Mat ut = pool.estimate_block(1, xcol, distinct.size(), ycol);
  out.u.resize(static_cast<Eigen::Index>(r));
  for (index_t k = 0; k < r; ++k)
    out.u[static_cast<Eigen::Index>(k)] = std::conj(ut(0, static_cast<Eigen::Index>(pos[sk.idx[k]]))) * sk.weight[k];
  out.coeffs = rur.core_apply(out.u);
  out.xhat_norm_proxy = rur.core_adjoint(out.coeffs).norm();
  out.worst_case = out.xhat_norm_proxy < eps * b_norm / spec.sigma;

  Guarantee& g = out.guarantee;
  g.pipeline = "solve_regularized";
  g.eps = eps;
  g.delta = delta;
  g.seeds = {rur.seed};
  g.sizes = {{"r", r}, {"c", rur.c()}, {"pool_per_mean", per}, {"pool_groups", groups}};
  if (out.worst_case) {
    g.bound = eps * b_norm / spec.sigma;
    g.bound_kind = "||xhat - x*|| (worst case)";
  } else {
    g.bound = eps * out.xhat_norm_proxy / std::max(1.0 - eps, 1e-3);
    g.bound_kind = "||xhat - x*|| <= eps ||x*||";
  }
  if (out.coeffs.norm() == 0.0) {
    out.empty = true;
    return out;
  }
  detail::RowTerms terms;
  terms.add_rows(a, rur.R.sketch(), out.coeffs);
  out.x = terms.combine();
  return out;
}

// ---------------------------------------------------------------------------
// support vector machines

namespace {

// L = [0 1^T; 1 I/gamma] with O(1) sampling
class ArrowSampler final : public MatrixSampler {
 public:
  ArrowSampler(index_t m, double inv_gamma) : m_(m), g_(inv_gamma) {}
  index_t rows() const override { return m_ + 1; }
  index_t cols() const override { return m_ + 1; }
  cplx query(index_t i, index_t j) const override {
    if (i == 0) return j == 0 ? 0.0 : 1.0;
    if (j == 0) return 1.0;
    return i == j ? g_ : 0.0;
  }
  double row_norm2(index_t i) const override { return i == 0 ? static_cast<double>(m_) : 1.0 + g_ * g_; }
  double frob2() const override { return static_cast<double>(m_) * (2.0 + g_ * g_); }
  index_t sample_row(Rng& rng) const override {
    if (uniform01(rng) * frob2() < static_cast<double>(m_)) return 0;
    return 1 + uniform_index(rng, m_);
  }
  index_t sample_in_row(index_t i, Rng& rng) const override {
    if (i == 0) return 1 + uniform_index(rng, m_);
    return uniform01(rng) * (1.0 + g_ * g_) < 1.0 ? 0 : i;
  }

 private:
  index_t m_;
  double g_;
};

void check_labels(const Vec& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    require(std::abs(y[i].imag()) == 0.0 && std::abs(std::abs(y[i].real()) - 1.0) <= 1e-12,
            "svm: labels must be +1 or -1");
}

}  // namespace

Mat svm_dense_fhat(const Mat& x, double gamma) {
  const auto m = x.rows();
  Mat f = Mat::Zero(m + 1, m + 1);
  f.block(0, 1, 1, m).setOnes();
  f.block(1, 0, m, 1).setOnes();
  f.block(1, 1, m, m) = x * x.adjoint();
  f.block(1, 1, m, m).diagonal().array() += 1.0 / gamma;
  return f / f.trace().real();
}

SvmResult svm_train(std::shared_ptr<const SqMatrix> x, const Vec& y, double gamma, double lambda, double eta, double eps,
                    double delta, const SvmOptions& opt, Rng& rng) {
  require(gamma > 0.0 && lambda > 0.0, "svm_train: gamma and lambda must be positive");
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "svm_train: need eps > 0 and delta in (0,1)");
  const index_t m = x->rows();
  require(static_cast<index_t>(y.size()) == m, "svm_train: label count must match the number of points");
  check_labels(y);
  SvmResult out;
  out.trace_f = x->frob2() + static_cast<double>(m) / gamma;
  out.kernel_eps = opt.kernel_eps > 0.0 ? opt.kernel_eps : eps;
  const double ke = out.kernel_eps;

  double fhat_norm = 0.0;
  if (m <= opt.dense_check_limit) {
    fhat_norm = svm_dense_fhat(x->dense(), gamma).operatorNorm();
    require(fhat_norm <= 1.0 + 1e-9, "svm_train: ||Fhat|| exceeds 1");
  }

  // kernel entries estimated once per pair, each from its own stream
  const OversampledMatrix xa = OversampledMatrix::exact(x);
  const std::uint64_t kseed = rng();
  const double kdelta = delta / (2.0 * static_cast<double>(std::max<index_t>(m, 1)));
  auto cache = std::make_shared<std::unordered_map<index_t, cplx>>();
  auto kernel = [x, xa, m, ke, kdelta, kseed, cache](index_t i, index_t j) -> cplx {
    if (i == j) return x->row_norm2(i);
    const bool swap = i > j;
    const index_t lo = swap ? j : i, hi = swap ? i : j;
    const index_t key = lo * m + hi;
    auto it = cache->find(key);
    if (it == cache->end()) {
      if (x->row_norm2(lo) == 0.0 || x->row_norm2(hi) == 0.0) {
        it = cache->emplace(key, cplx(0.0)).first;
      } else {
        Rng local(child_seed(kseed, key));
        const OversampledVector u = row_vector(xa, lo, true);
        const OversampledVector v = row_vector(xa, hi, true);
        const double tol = ke * std::sqrt(x->row_norm2(lo) * x->row_norm2(hi));
        const cplx est = inner_product_estimate(u, v.entry, x->row_norm2(hi), tol, kdelta, local);
        it = cache->emplace(key, est).first;
      }
    }
    return swap ? std::conj(it->second) : it->second;
  };

  OversampledMatrix lacc;
  auto arrow = std::make_shared<ArrowSampler>(m, 1.0 / gamma);
  lacc.bound = arrow;
  lacc.entry = [arrow](index_t i, index_t j) { return arrow->query(i, j); };
  lacc.frob2 = arrow->frob2();

  Vec xt = Vec::Zero(static_cast<Eigen::Index>(m + 1));
  for (index_t i = 0; i < m; ++i) xt[static_cast<Eigen::Index>(i + 1)] = std::sqrt((1.0 + ke) * x->row_norm2(i));
  const OversampledVector xv = OversampledVector::exact(xt);
  OversampledMatrix kacc = outer_product(xv, xv);
  kacc.frob2.reset();
  kacc.entry = [kernel](index_t i, index_t j) -> cplx {
    if (i == 0 || j == 0) return 0.0;
    return kernel(i - 1, j - 1);
  };
  const double tf = out.trace_f;
  out.M = matrix_linear_combination({lacc, kacc}, {1.0 / tf, 1.0 / tf});

  Vec rhs = Vec::Zero(static_cast<Eigen::Index>(m + 1));
  rhs.tail(static_cast<Eigen::Index>(m)) = y;
  RegressionOptions ro = opt.solve;
  if (ro.spectral_norm <= 0.0 && fhat_norm > 0.0) ro.spectral_norm = fhat_norm;
  out.solve = solve_regularized(out.M, OversampledVector::exact(rhs), {lambda, eta}, eps, delta / 2, ro, rng);

  Guarantee& g = out.guarantee;
  g = out.solve.guarantee;
  g.pipeline = "svm_train";
  g.delta = delta;
  g.seeds.push_back(kseed);
  g.sizes["m"] = m;
  return out;
}

SvmAltResult svm_train_alt(std::shared_ptr<const SqMatrix> xt, const Vec& y, double gamma, double eps, double delta,
                           const SvmAltOptions& opt, Rng& rng) {
  require(gamma > 0.0, "svm_train_alt: gamma must be positive");
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "svm_train_alt: need eps > 0 and delta in (0,1)");
  const index_t m = xt->cols();
  require(static_cast<index_t>(y.size()) == m, "svm_train_alt: label count must match the number of points");
  check_labels(y);
  const double s2 = 1.0 / gamma;
  const double md = static_cast<double>(m);
  const OversampledMatrix acc = OversampledMatrix::exact(xt);

  SvmAltResult out;
  SvtOptions so = opt.svt;
  so.eps = eps / s2;
  so.delta = delta / 4;
  if (so.spectral_norm <= 0.0) so.spectral_norm = opt.spectral_norm;
  out.rur = even_svt(acc, fn::shifted_inverse(s2), so, rng);
  const RurDecomposition& rur = out.rur;

  const OversampledVector ones = OversampledVector::exact(Vec::Ones(static_cast<Eigen::Index>(m)));
  const OversampledVector yv = OversampledVector::exact(y);
  const double er = opt.eps_rows > 0.0 ? opt.eps_rows : eps * std::sqrt(md * s2);
  const Vec r1 = sketched_row_products(rur.R, ones, er, delta / 4, rng);
  const Vec ry = sketched_row_products(rur.R, yv, er, delta / 4, rng);
  const double sum_y =
      inner_product_estimate(yv, [](index_t) { return cplx(1.0); }, md, eps * md, delta / 4, rng).real();

  const cplx num = r1.dot(rur.core_apply(ry)) + sum_y / s2;
  const cplx den = r1.dot(rur.core_apply(r1)) + md / s2;
  out.b = (num / den).real();
  out.coeffs = rur.core_apply(ry - out.b * r1);

  detail::RowTerms terms;
  terms.add_rows(acc, rur.R.sketch(), out.coeffs);
  terms.add(yv, 1.0 / s2);
  terms.add(ones, -out.b / s2);
  out.alpha = terms.combine();

  Guarantee& g = out.guarantee;
  g.pipeline = "svm_train_alt";
  g.eps = eps;
  g.delta = delta;
  g.seeds = {rur.seed};
  g.sizes = {{"r", rur.r()}, {"c", rur.c()}};
  g.bound = eps * gamma * y.norm();
  g.bound_kind = "||alphahat - alpha||; |bhat - b| <= eps (1 + |b|)";
  return out;
}

}  // namespace sqla::apps
