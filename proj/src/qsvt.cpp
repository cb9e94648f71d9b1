#include "sqla/svt.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sqla {

namespace {

double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
  return acc;
}

std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

}  // namespace

double QsvtPolynomial::operator()(double x) const { return horner(coeffs, x); }
double QsvtPolynomial::q_at(double x) const { return horner(q, x); }

QsvtPolynomial QsvtPolynomial::from_coeffs(std::vector<double> coeffs, Parity parity) {
  require(!coeffs.empty(), "QsvtPolynomial: no coefficients");
  require(coeffs.size() <= 65, "QsvtPolynomial: degree above 64");
  QsvtPolynomial p;
  p.parity = parity;
  const std::size_t off = parity == Parity::Even ? 0 : 1;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (k % 2 != off) {
      if (std::abs(coeffs[k]) > 1e-14) fail(ErrorKind::Validation, "QsvtPolynomial: parity mismatch with coefficients");
      coeffs[k] = 0.0;
    }
  }
  while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
  p.coeffs = coeffs;
  for (std::size_t k = off; k < coeffs.size(); k += 2) p.q.push_back(coeffs[k]);
  if (p.q.empty()) p.q.push_back(0.0);
  for (int t = 0; t <= 10000; ++t) {
    const double x = -1.0 + 2.0 * t / 10000.0;
    const double v = p(x);
    require(std::abs(v) <= 1.0 + 1e-9, "QsvtPolynomial: |p| exceeds 1 on [-1,1]");
    const double w = p(-x);
    require(std::abs(w - (parity == Parity::Even ? v : -v)) <= 1e-12 * std::max(1.0, std::abs(v)),
            "QsvtPolynomial: parity check failed");
  }
  return p;
}

QsvtPolynomial QsvtPolynomial::chebyshev(index_t d, double scale) {
  std::vector<double> t0{1.0}, t1{0.0, 1.0};
  if (d == 0) t1 = t0;
  for (index_t k = 1; k < d; ++k) {
    std::vector<double> t2(t1.size() + 1, 0.0);
    for (std::size_t i = 0; i < t1.size(); ++i) t2[i + 1] += 2.0 * t1[i];
    for (std::size_t i = 0; i < t0.size(); ++i) t2[i] -= t0[i];
    t0 = t1;
    t1 = t2;
  }
  for (double& c : t1) c *= scale;
  return from_coeffs(t1, d % 2 ? Parity::Odd : Parity::Even);
}

EnvelopeBounds poly_envelope_bounds(const QsvtPolynomial& p, index_t grid) {
  const std::vector<double>& q = p.q;
  const std::vector<double> dq = derivative(q);
  std::vector<double> qbar(q.begin() + 1, q.end());
  if (qbar.empty()) qbar.push_back(0.0);
  const std::vector<double> dqbar = derivative(qbar);
  EnvelopeBounds e;
  for (index_t t = 0; t <= grid; ++t) {
    const double x = static_cast<double>(t) / static_cast<double>(grid);
    e.q_max = std::max(e.q_max, std::abs(horner(q, x)));
    e.dq_max = std::max(e.dq_max, std::abs(horner(dq, x)));
    e.qbar_max = std::max(e.qbar_max, std::abs(horner(qbar, x)));
    e.dqbar_max = std::max(e.dqbar_max, std::abs(horner(dqbar, x)));
  }
  return e;
}

namespace {

ScalarFunction q_function(const QsvtPolynomial& p) {
  const EnvelopeBounds e = poly_envelope_bounds(p, 20000);
  ScalarFunction f = fn::clamp(fn::polynomial(p.q), -1.0, 1.0);
  f.name = "qsvt_q";
  f.L = e.dq_max;
  f.Lbar = e.dqbar_max;
  return f;
}

}  // namespace

QsvtResult qsvt_apply(const OversampledMatrix& a, const OversampledMatrix* at, const OversampledVector& b,
                      const QsvtPolynomial& p, double eps, double delta, const QsvtOptions& opt, Rng& rng) {
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "qsvt_apply: need eps > 0 and delta in (0,1)");
  require(b.size() == a.cols(), "qsvt_apply: dimension mismatch");
  const double af = a.frob2 ? *a.frob2 : a.bound_frob2();
  require(std::abs(af - 1.0) <= 1e-8, "qsvt_apply: ||A||_F must equal 1");
  const double bn = b.norm2 ? *b.norm2 : b.bound_norm2();
  require(std::abs(bn - 1.0) <= 1e-8, "qsvt_apply: ||b|| must equal 1");
  const double d = static_cast<double>(std::max<index_t>(p.degree(), 1));
  const double eps_b = opt.eps_b > 0.0 ? opt.eps_b : eps / d;

  QsvtResult out;
  out.parity = p.parity;
  ScalarFunction f = q_function(p);
  SvtOptions so = opt.svt;
  so.eps = eps;
  so.delta = delta / 4;
  if (so.spectral_norm <= 0.0) so.spectral_norm = 1.0;  // ||A|| <= ||A||_F = 1
  out.rur = even_svt(a, f, so, rng);
  const RurDecomposition& rur = out.rur;
  const Vec u = sketched_row_products(rur.R, b, eps_b, delta / 4, rng);
  const Vec w = rur.core_apply(u);

  if (p.parity == Parity::Even) {
    out.v = rur_output_handle(rur, w, rur.f0, &b);
    return out;
  }

  require(at != nullptr, "qsvt_apply: odd polynomials need SQ access to A^dagger");
  require(at->rows() == a.cols() && at->cols() == a.rows(), "qsvt_apply: A^dagger has the wrong shape");
  // A R^dagger ~ A' R'^dagger over columns drawn from R's column norms
  const index_t cp = opt.cprime ? opt.cprime : rur.c();
  RowSketch tp = draw_row_sketch(rur.R.column_dist(), cp, rng);
  const Mat rprime = rur.R.core(tp);
  const Vec z = rprime.adjoint() * w;
  std::map<index_t, cplx> coef;
  for (index_t l = 0; l < tp.size(); ++l) coef[tp.idx[l]] += z[static_cast<Eigen::Index>(l)] * tp.weight[l];
  // q(0) A b ~ q(0) A'' b'' over columns drawn from b
  const cplx q0 = rur.f0;
  if (q0 != 0.0) {
    const index_t sb = opt.sb ? opt.sb : static_cast<index_t>(std::ceil(1.0 / (eps_b * eps_b * delta / 4)));
    const double b2 = b.bound_norm2();
    for (index_t t = 0; t < sb; ++t) {
      const index_t j = b.bound->sample(rng);
      const double pj = abs2(b.bound->query(j)) / b2;
      coef[j] += q0 * b.query(j) / (static_cast<double>(sb) * pj);
    }
  }
  std::vector<OversampledVector> vs;
  std::vector<cplx> ls;
  for (auto [j, c] : coef) {
    if (c == 0.0) continue;
    vs.push_back(row_vector(*at, j, true));
    ls.push_back(c);
  }
  if (vs.empty()) fail(ErrorKind::ZeroNorm, "qsvt_apply: output is identically zero");
  out.v = linear_combination(vs, ls);
  return out;
}

}  // namespace sqla
