#include "apps_internal.hpp"

#include <algorithm>
#include <cmath>

namespace sqla::apps {

using detail::clamp_count;
using detail::frob2_of;
using detail::norm2_of;

namespace {

// ||R^dagger U|| through ||C^dagger U|| = max_i d_i |fbar(d_i^2)| since R R^dagger ~ C C^dagger
double left_gain(const RurDecomposition& rur) {
  double g = 0.0;
  for (Eigen::Index i = 0; i < rur.svd.s.size(); ++i)
    g = std::max(g, rur.svd.s[i] * std::abs(rur.fbar_shift[i] + rur.fbar0));
  return g;
}

}  // namespace

HamiltonianResult hamiltonian_evolve(const OversampledMatrix& h, const OversampledVector& b, double eps, double delta,
                                     const HamiltonianOptions& opt, Rng& rng) {
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "hamiltonian_evolve: need eps > 0 and delta in (0,1)");
  require(h.rows() == h.cols(), "hamiltonian_evolve: H must be square");
  require(b.size() == h.cols(), "hamiltonian_evolve: b has the wrong length");
  if (b.norm2) require(std::abs(*b.norm2 - 1.0) <= 1e-9, "hamiltonian_evolve: b must be a unit vector");
  check_hermitian(h, 1000, rng);

  HamiltonianResult out;
  Guarantee& g = out.guarantee;
  g.pipeline = "hamiltonian_evolve";
  g.eps = eps;
  g.delta = delta;
  g.bound = eps;
  g.bound_kind = "||bhat - exp(iH) b||";
  const double hf2 = frob2_of(h);
  if (hf2 == 0.0) {
    out.trivial = true;
    out.b_hat = b;
    return out;
  }
  const double t = detail::spectral_or_estimate(h, opt.spectral_norm, rng);

  ScalarFunction fcos, fsinc;
  if (opt.mode == HamiltonianMode::LowRank) {
    const double s = opt.sigma;
    require(s > 0.0, "hamiltonian_evolve: low-rank mode needs the minimum singular value");
    require(eps < std::min(0.5, s), "hamiltonian_evolve: low-rank mode needs eps < min(1/2, sigma)");
    fcos = fn::cos_sqrt(std::min(0.5, 1.0 / (2.0 * s)), std::min(1.0 / 24.0, 5.0 / (2.0 * s * s * s)));
    fsinc = fn::isinc_sqrt(std::min(0.25, 1.0 / (s * s)), std::min(1.0 / 60.0, 3.0 / (s * s * s * s)));
    fcos.d = fsinc.d = s * s / 2.0;
  } else {
    require(eps < std::min(0.5, t * t * t), "hamiltonian_evolve: general mode needs eps < min(1/2, t^3)");
    fcos = fn::cos_sqrt();
    fsinc = fn::isinc_sqrt();
  }

  const double d5 = delta / 5;
  SvtOptions sc = opt.cos_svt;
  sc.eps = eps / 4;
  sc.delta = d5;
  sc.spectral_norm = t;
  out.cos_rur = even_svt(h, fcos, sc, rng);
  SvtOptions ss = opt.sinc_svt;
  ss.eps = eps / (4 * t);
  ss.delta = d5;
  ss.spectral_norm = t;
  out.sinc_rur = even_svt(h, fsinc, ss, rng);
  const RurDecomposition& rc = out.cos_rur;
  const RurDecomposition& rs = out.sinc_rur;
  const double tau = eps / 8;
  const double b2 = norm2_of(b);
  const index_t cap = 1 << 20;

  detail::RowTerms terms;
  // cos(H) b ~ R_cos^dagger U_cos u + b
  const double gc = left_gain(rc);
  if (gc > 0.0) {
    const Vec u = sketched_row_products(rc.R, b, tau / gc, d5, rng);
    terms.add_rows(h, rc.R.sketch(), rc.core_apply(u));
  }
  terms.add(b, 1.0);

  // the sinc part: R_sinc^dagger U_sinc W v with R_sinc H ~ W C and C b ~ v
  const double gs = left_gain(rs);
  index_t w_count = 0;
  if (gs > 0.0) {
    const double rf = std::sqrt(rs.R.bound_frob2());
    const double e = tau / (gs * rf * std::sqrt(hf2) * std::sqrt(b2));
    w_count = opt.w_samples ? opt.w_samples
                            : clamp_count(opt.sample_constant * static_cast<double>(joint_matmul_size(1.0, 1.0, e, d5)),
                                          1, rs.R.cols() * 4 + 64);
    const RowSketch tj = draw_joint_sketch(rs.R.column_dist(), row_norm_dist(h.bound), w_count, rng);
    const Mat w = rs.R.core(tj);
    const SketchedMatrix c(h, tj);
    const double wn = w.operatorNorm();
    if (wn > 0.0) {
      const Vec v = sketched_row_products(c, b, tau / (gs * wn), d5, rng);
      terms.add_rows(h, rs.R.sketch(), rs.core_apply(w * v));
    }
  }

  // i H b ~ i R^dagger w from j ~ |b_j|^2, Chebyshev-sized
  const index_t hs = opt.h_samples ? opt.h_samples
                                   : clamp_count(opt.sample_constant * hf2 * b2 / (tau * tau * d5), 1, cap);
  std::map<index_t, cplx> hb;
  for (index_t k = 0; k < hs; ++k) {
    const index_t j = b.bound->sample(rng);
    const double p = b.bound->prob(j);
    hb[j] += b.query(j) / (static_cast<double>(hs) * p);
  }
  for (auto& [j, c] : hb) c *= cplx(0.0, 1.0);
  terms.add_rows(h, hb);

  out.b_hat = terms.combine();
  g.seeds = {rc.seed, rs.seed};
  g.sizes = {{"r_cos", rc.r()}, {"c_cos", rc.c()}, {"r_sinc", rs.r()},
             {"c_sinc", rs.c()}, {"w_samples", w_count}, {"h_samples", hs}};
  return out;
}

}  // namespace sqla::apps
