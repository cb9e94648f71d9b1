#include "sqla/svt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace sqla {

std::string to_string(NormMode m) { return m == NormMode::Spectral ? "spectral" : "frobenius"; }

namespace {

double log_inv(double delta) { return std::max(std::log(1.0 / delta), 1.0); }

index_t clamp_size(double v, const SvtOptions& opt) {
  if (!std::isfinite(v)) return opt.max_size;
  const double lo = static_cast<double>(opt.min_size), hi = static_cast<double>(opt.max_size);
  return static_cast<index_t>(std::clamp(std::ceil(v), lo, hi));
}

double frob_of(const OversampledMatrix& a) { return std::sqrt(a.frob2 ? *a.frob2 : a.bound_frob2()); }

double phi_of(const OversampledMatrix& a) {
  if (!a.phi_known()) return 1.0;
  const double p = a.phi();
  return std::isfinite(p) ? p : 1.0;
}

// positions grouped by (index, weight); weights depend only on the index for our sketches
struct Groups {
  std::vector<index_t> of;
  std::vector<index_t> rep;
  std::vector<double> count;
};

Groups group_sketch(const RowSketch& s) {
  Groups g;
  std::map<std::pair<index_t, double>, index_t> seen;
  g.of.resize(s.size());
  for (index_t k = 0; k < s.size(); ++k) {
    auto [it, fresh] = seen.emplace(std::make_pair(s.idx[k], s.weight[k]), g.rep.size());
    if (fresh) {
      g.rep.push_back(k);
      g.count.push_back(0.0);
    }
    g.of[k] = it->second;
    g.count[it->second] += 1.0;
  }
  return g;
}

}  // namespace

double svt_eps_bar(double spectral_norm, double frob, double phi, double delta, index_t r, index_t c) {
  const double m = static_cast<double>(std::min(r, c));
  return spectral_norm * frob * std::sqrt(phi * phi * log_inv(delta) / m);
}

SvtSizes even_svt_sizes(const ScalarFunction& f, double phi, double spectral_norm, double frob,
                        const SvtOptions& opt) {
  require(opt.eps > 0.0, "even_svt: eps must be positive");
  require(opt.delta > 0.0 && opt.delta <= 1.0, "even_svt: delta must lie in (0,1]");
  const double star = opt.norm == NormMode::Spectral ? spectral_norm : frob;
  const double common = phi * phi * star * star * frob * frob * log_inv(opt.delta) / (opt.eps * opt.eps);
  SvtSizes s;
  s.r = opt.r ? opt.r : clamp_size(opt.r_constant * f.L * f.L * common, opt);
  const double s2 = spectral_norm * spectral_norm;
  s.c = opt.c ? opt.c : clamp_size(opt.c_constant * f.Lbar * f.Lbar * s2 * s2 * common, opt);
  s.eps_bar = svt_eps_bar(spectral_norm, frob, phi, opt.delta, s.r, s.c);
  return s;
}

double estimate_spectral_norm(const OversampledMatrix& a, Rng& rng, index_t start, index_t cap) {
  double prev = -1.0;
  for (index_t s = start; s <= cap; s *= 2) {
    const RVec sv = estimate_singular_values(a, s, s, rng);
    const double cur = sv.size() ? sv[0] : 0.0;
    if (prev > 0.0 && std::abs(cur - prev) <= 0.25 * std::max(cur, prev)) return cur;
    prev = cur;
  }
  return prev > 0.0 ? prev : frob_of(a);
}

// ---------------------------------------------------------------------------

Mat RurDecomposition::U() const {
  const auto k = static_cast<Eigen::Index>(fbar_shift.size());
  const Mat& u = svd.u;
  Mat out = u.leftCols(k) * fbar_shift.asDiagonal() * u.leftCols(k).adjoint();
  out.diagonal().array() += fbar0;
  return out;
}

Vec RurDecomposition::core_apply(const Vec& w) const {
  const auto k = static_cast<Eigen::Index>(fbar_shift.size());
  Vec t = svd.u.leftCols(k).adjoint() * w;
  return svd.u.leftCols(k) * fbar_shift.cwiseProduct(t) + fbar0 * w;
}

Vec RurDecomposition::core_adjoint(const Vec& w) const {
  return svd.s.cast<cplx>().cwiseProduct(svd.u.adjoint() * w);
}

Vec RurDecomposition::apply(const Vec& b) const {
  Vec out = R.adjoint_times(core_apply(R.times(b)));
  if (f0 != 0.0) out += f0 * b;
  return out;
}

namespace {

// R^dagger (u diag(shift) u^dagger + base I) R over the distinct rows of R
Mat rur_sandwich(const RurDecomposition& rur, const Vec& shift, cplx base) {
  const Groups g = group_sketch(rur.R.sketch());
  const auto d = static_cast<Eigen::Index>(g.rep.size());
  const auto k = shift.size();
  const auto n = static_cast<Eigen::Index>(rur.dim());
  Mat rd(d, n);
  Mat ug = Mat::Zero(d, k);
  for (Eigen::Index h = 0; h < d; ++h) rd.row(h) = rur.R.row(g.rep[static_cast<size_t>(h)]).transpose();
  for (index_t j = 0; j < rur.r(); ++j)
    ug.row(static_cast<Eigen::Index>(g.of[j])) += rur.svd.u.row(static_cast<Eigen::Index>(j)).head(k);
  Mat mid = ug * shift.asDiagonal() * ug.adjoint();
  for (Eigen::Index h = 0; h < d; ++h) mid(h, h) += base * g.count[static_cast<size_t>(h)];
  return rd.adjoint() * mid * rd;
}

}  // namespace

Mat RurDecomposition::dense_operator() const {
  Mat out = rur_sandwich(*this, fbar_shift, fbar0);
  out.diagonal().array() += f0;
  return out;
}

RurDecomposition rur_from_sketches(const OversampledMatrix& a, RowSketch s, RowSketch t, const ScalarFunction& f) {
  RurDecomposition out;
  out.R = SketchedMatrix(a, std::move(s));
  out.T = std::move(t);
  out.function = f.name;
  out.f0 = f.f0();
  out.fbar0 = f.fbar0();
  // C = E Cm F^dagger with E, F orthonormal indicator columns scaled by 1/sqrt(count)
  const Groups gr = group_sketch(out.R.sketch());
  const Groups gc = group_sketch(out.T);
  const auto dr = static_cast<Eigen::Index>(gr.rep.size()), dc = static_cast<Eigen::Index>(gc.rep.size());
  out.C.resize(dr, dc);
  for (Eigen::Index h = 0; h < dc; ++h) {
    const index_t l = gc.rep[static_cast<size_t>(h)];
    const double wc = out.T.weight[l] * std::sqrt(gc.count[static_cast<size_t>(h)]);
    for (Eigen::Index g = 0; g < dr; ++g)
      out.C(g, h) = out.R.R(gr.rep[static_cast<size_t>(g)], out.T.idx[l]) * wc *
                    std::sqrt(gr.count[static_cast<size_t>(g)]);
  }
  const SmallSvd m = small_svd(out.C);
  const Eigen::Index q = m.s.size();
  out.svd.s = m.s;
  out.svd.u.resize(static_cast<Eigen::Index>(out.R.rows()), q);
  for (index_t k = 0; k < out.R.rows(); ++k) {
    const index_t g = gr.of[k];
    out.svd.u.row(static_cast<Eigen::Index>(k)) = m.u.row(static_cast<Eigen::Index>(g)) / std::sqrt(gr.count[g]);
  }
  out.svd.v.resize(static_cast<Eigen::Index>(out.T.size()), q);
  for (index_t l = 0; l < out.T.size(); ++l) {
    const index_t h = gc.of[l];
    out.svd.v.row(static_cast<Eigen::Index>(l)) = m.v.row(static_cast<Eigen::Index>(h)) / std::sqrt(gc.count[h]);
  }
  const auto k = out.svd.s.size();
  out.fbar_shift.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double d = out.svd.s[i];
    out.fbar_shift[i] = f.constant ? cplx(0.0) : f.fbar(d * d) - out.fbar0;
  }
  if (f.constant) out.fbar0 = 0.0;
  // proxies from C: ||R|| ~ ||C||, and RR^dagger ~ CC^dagger
  RurDiagnostics& dg = out.diagnostics;
  dg.r_norm = k ? out.svd.s[0] : 0.0;
  double fb = out.R.rows() > static_cast<index_t>(k) ? std::abs(out.fbar0) : 0.0;
  double sq = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double v = std::abs(out.fbar_shift[i] + out.fbar0);
    fb = std::max(fb, v);
    sq = std::max(sq, out.svd.s[i] * std::sqrt(v));
  }
  dg.fbar_norm = fb;
  dg.sqrt_norm = sq;
  return out;
}

RurDecomposition even_svt(const OversampledMatrix& a, const ScalarFunction& f, const SvtOptions& opt, Rng& rng) {
  const double frob = frob_of(a);
  const double phi = phi_of(a);
  const bool need_norm = (opt.r == 0 || opt.c == 0 || (opt.check_radius && std::isfinite(f.d)));
  double spec = opt.spectral_norm;
  const std::uint64_t seed = rng();
  Rng local(seed);
  if (spec <= 0.0) spec = need_norm ? estimate_spectral_norm(a, local) : frob;
  const SvtSizes sz = even_svt_sizes(f, phi, spec, frob, opt);
  if (opt.check_radius && std::isfinite(f.d) && sz.eps_bar >= f.d) {
    std::ostringstream msg;
    msg << "even_svt: sketch sizes r=" << sz.r << ", c=" << sz.c << " give eps_bar=" << sz.eps_bar
        << ", which is not below the validity radius d=" << f.d << "; increase r and c";
    fail(ErrorKind::Validation, msg.str());
  }
  RowSketch s = draw_row_sketch(a, sz.r, local);
  s.seed = seed;
  SketchedMatrix r(a, s);
  RowSketch t = r.draw_column_sketch(sz.c, local);
  t.seed = seed;
  RurDecomposition out = rur_from_sketches(a, std::move(s), std::move(t), f);
  out.eps = opt.eps;
  out.delta = opt.delta;
  out.norm = opt.norm;
  out.seed = seed;
  out.diagnostics.eps_bar = sz.eps_bar;
  return out;
}

RurDiagnostics rur_diagnostics_exact(const RurDecomposition& rur) {
  RurDiagnostics d = rur.diagnostics;
  const auto k = rur.fbar_shift.size();
  d.r_norm = std::sqrt(rur_sandwich(rur, Vec::Zero(k), 1.0).operatorNorm());
  // U = u diag(fbar_shift) u^dagger + fbar0 I with orthonormal u, so |U| keeps the same eigenvectors
  const double b = std::abs(rur.fbar0);
  d.fbar_norm = rur.r() > static_cast<index_t>(k) ? b : 0.0;
  Vec shift(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double v = std::abs(rur.fbar_shift[i] + rur.fbar0);
    d.fbar_norm = std::max(d.fbar_norm, v);
    shift[i] = v - b;
  }
  d.sqrt_norm = std::sqrt(rur_sandwich(rur, shift, b).operatorNorm());
  d.exact = true;
  return d;
}

// ---------------------------------------------------------------------------

OversampledVector rur_output_handle(const RurDecomposition& rur, const Vec& coeffs, cplx shift,
                                    const OversampledVector* b) {
  require(static_cast<index_t>(coeffs.size()) == rur.r(), "rur_output_handle: coefficient length mismatch");
  const RowSketch& s = rur.R.sketch();
  std::map<index_t, cplx> merged;
  for (index_t k = 0; k < s.size(); ++k) {
    const cplx c = coeffs[static_cast<Eigen::Index>(k)] * s.weight[k];
    if (c != 0.0) merged[s.idx[k]] += c;
  }
  std::vector<OversampledVector> vs;
  std::vector<cplx> ls;
  for (auto [i, c] : merged) {
    if (c == 0.0) continue;
    vs.push_back(row_vector(rur.R.source(), i, true));
    ls.push_back(c);
  }
  if (shift != 0.0) {
    require(b != nullptr, "rur_output_handle: shift term needs the input vector");
    vs.push_back(*b);
    ls.push_back(shift);
  }
  if (vs.empty()) fail(ErrorKind::ZeroNorm, "rur_apply: output is identically zero");
  return linear_combination(vs, ls);
}

OversampledVector rur_apply(const RurDecomposition& rur, const OversampledVector& b, ApplyMode mode, double eps_b,
                            double delta_b, Rng& rng) {
  require(b.size() == rur.dim(), "rur_apply: dimension mismatch");
  Vec u;
  if (mode == ApplyMode::Exact) {
    u = rur.R.times(b.dense());
  } else {
    require(static_cast<bool>(b.bound), "rur_apply: sketched mode needs SQ access to b");
    u = sketched_row_products(rur.R, b, eps_b, delta_b, rng);
  }
  return rur_output_handle(rur, rur.core_apply(u), rur.f0, &b);
}

Vec rur_apply_dense(const RurDecomposition& rur, const Vec& b) { return rur.apply(b); }

// ---------------------------------------------------------------------------

Mat CurDecomposition::column_factor() const {
  Mat out(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(cols.size()));
  for (index_t l = 0; l < cols.size(); ++l)
    for (index_t i = 0; i < a.rows(); ++i)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = a.query(i, cols.idx[l]) * cols.weight[l];
  return out;
}

Mat CurDecomposition::dense_operator() const {
  Mat out = column_factor() * M * R.dense();
  if (shift_term) out += g0 * a.dense();
  return out;
}

Vec CurDecomposition::apply(const Vec& x) const {
  Vec out = column_factor() * (M * R.times(x));
  if (shift_term) out += g0 * (a.dense() * x);
  return out;
}

CurDecomposition generic_svt(const OversampledMatrix& a, const OversampledMatrix* at, const ScalarFunction& g,
                             const GenericSvtOptions& opt, Rng& rng) {
  require(at != nullptr || opt.one_sided, "generic_svt: needs SQ access to A^dagger (or the one-sided fallback)");
  if (at) require(at->rows() == a.cols() && at->cols() == a.rows(), "generic_svt: A^dagger has the wrong shape");
  CurDecomposition out;
  out.a = a;
  out.inner = even_svt(a, g, opt.svt, rng);
  out.R = out.inner.R;
  out.g0 = out.inner.f0;
  out.shift_term = out.g0 != 0.0;
  const index_t cp = opt.cprime ? opt.cprime : out.inner.c();
  const RowDist rcol = out.R.column_dist();
  if (opt.one_sided || at == nullptr) {
    out.cols = draw_row_sketch(rcol, cp, rng);
  } else {
    out.cols = draw_joint_sketch(row_norm_dist(at->bound), rcol, cp, rng);
  }
  // M = (S A T')^dagger fbar(CC^dagger)
  const Mat rprime = out.R.core(out.cols);
  out.M = rprime.adjoint() * out.inner.U();
  return out;
}

void check_hermitian(const OversampledMatrix& a, index_t probes, Rng& rng, double tol) {
  require(a.rows() == a.cols(), "check_hermitian: matrix is not square");
  const index_t n = a.rows();
  for (index_t t = 0; t < probes; ++t) {
    const index_t i = uniform_index(rng, n), j = uniform_index(rng, n);
    const cplx x = a.query(i, j), y = std::conj(a.query(j, i));
    if (std::abs(x - y) > tol * std::max(1.0, std::abs(x)))
      fail(ErrorKind::InvariantViolation, "check_hermitian: A(i,j) != conj(A(j,i)) at a probed pair");
  }
}

}  // namespace sqla
