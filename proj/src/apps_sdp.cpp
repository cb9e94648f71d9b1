#include "apps_internal.hpp"

#include "sqla/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace sqla::apps {

void validate(const SdpInstance& inst, Rng& rng, bool dense_norm_check) {
  require(!inst.constraints.empty(), "sdp: need at least one constraint");
  require(inst.constraints.size() == inst.b.size(), "sdp: one bound per constraint");
  require(inst.eps > 0.0 && inst.eps <= 1.0, "sdp: eps must lie in (0,1]");
  const index_t n = inst.dim();
  require(n >= 2, "sdp: dimension must be at least 2");
  for (const auto& a : inst.constraints) {
    require(a.rows() == n && a.cols() == n, "sdp: constraints must be square of one size");
    check_hermitian(a, 200, rng);
    if (dense_norm_check) require(a.dense().operatorNorm() <= 1.0 + 1e-9, "sdp: constraint norm exceeds 1");
  }
}

bool sdp_dense_branch(const std::vector<OversampledMatrix>& constraints, double theta) {
  double f = 0.0;
  for (const auto& a : constraints) f = std::max(f, std::sqrt(detail::frob2_of(a)));
  const double n = static_cast<double>(constraints.at(0).rows());
  return f / theta * std::log(n) > std::sqrt(n) / 18.0;
}

TraceEstimates gibbs_trace_estimates(const std::vector<OversampledMatrix>& constraints, double theta,
                                     const std::vector<index_t>& js, double delta, const TraceOptions& opt, Rng& rng) {
  require(!constraints.empty(), "gibbs_trace_estimates: no constraints");
  require(theta > 0.0 && delta > 0.0 && delta < 1.0, "gibbs_trace_estimates: need theta > 0 and delta in (0,1)");
  const index_t n = constraints[0].rows();
  const index_t m = constraints.size();
  const double nd = static_cast<double>(n);
  TraceEstimates out;
  out.values.assign(m, 0.0);

  std::map<index_t, index_t> counts;
  for (index_t j : js) {
    require(j < m, "gibbs_trace_estimates: constraint index out of range");
    ++counts[j];
  }
  if (counts.empty()) {
    for (index_t i = 0; i < m; ++i) {
      double tr = 0.0;
      for (index_t k = 0; k < n; ++k) tr += constraints[i].query(k, k).real();
      out.values[i] = tr / nd;
    }
    out.partition = nd;
    return out;
  }

  if (!opt.force_sketched && sdp_dense_branch(constraints, theta)) {
    out.dense_branch = true;
    std::vector<Mat> dense(m);
    const auto nn = static_cast<Eigen::Index>(n);
    Mat h = Mat::Zero(nn, nn);
    for (auto [j, c] : counts) {
      dense[j] = constraints[j].dense();
      h -= theta * static_cast<double>(c) * dense[j];
    }
    const oracle::HermitianEig e = oracle::hermitian_eig(h);
    const double top = e.values.maxCoeff();
    RVec ev = (e.values.array() - top).exp();
    const Mat x = e.vectors * ev.cast<cplx>().asDiagonal() * e.vectors.adjoint();
    const double z = ev.sum();
    out.partition = z * std::exp(top);
    for (index_t i = 0; i < m; ++i) {
      if (dense[i].size() == 0) dense[i] = constraints[i].dense();
      out.values[i] = (dense[i] * x).trace().real() / z;
    }
    return out;
  }

  std::vector<OversampledMatrix> terms;
  std::vector<cplx> lambdas;
  for (auto [j, c] : counts) {
    terms.push_back(constraints[j]);
    lambdas.push_back(-theta * static_cast<double>(c));
  }
  const OversampledMatrix h = matrix_linear_combination(terms, lambdas);
  EigenOptions eo = opt.eigen;
  const double spec = eo.spectral_norm > 0.0 ? eo.spectral_norm : estimate_spectral_norm(h, rng);
  eo.spectral_norm = spec;
  const double ee = opt.eigen_eps_factor * theta;
  if (ee > spec) {
    out.early_out = true;
    return out;
  }
  out.eig = eigen_transform(h, fn::identity(), ee, delta / 2, eo, rng);
  const EigenDecompApprox& eig = *out.eig;
  const RVec& d = eig.D;
  if (d.size() == 0 || d.cwiseAbs().maxCoeff() < 0.75) {
    out.early_out = true;
    return out;
  }
  const RVec em1 = d.array().exp() - 1.0;
  out.partition = em1.sum() + nd;

  // Utilde = N R with lazily computed columns
  auto cache = std::make_shared<std::unordered_map<index_t, Vec>>();
  const Eigen::Index r = static_cast<Eigen::Index>(eig.R.rows());
  auto col = [&eig, cache, r](index_t j) -> const Vec& {
    auto it = cache->find(j);
    if (it != cache->end()) return it->second;
    Vec rc(r);
    for (Eigen::Index k = 0; k < r; ++k) rc[k] = eig.R.R(static_cast<index_t>(k), j);
    return cache->emplace(j, eig.N * rc).first->second;
  };
  auto bfn = [&col, &em1](index_t i, index_t j) -> cplx {
    const Vec& ui = col(i);
    const Vec& uj = col(j);
    cplx s = 0.0;
    for (Eigen::Index k = 0; k < em1.size(); ++k) s += std::conj(ui[k]) * em1[k] * uj[k];
    return s;
  };
  const double bf2 = 4.0 * em1.squaredNorm();
  const double tol = theta * out.partition / (9.0 * opt.trace_constant);
  const double di = delta / (2.0 * static_cast<double>(m));
  for (index_t i = 0; i < m; ++i) {
    const cplx tr = trace_product_estimate(constraints[i], bfn, n, n, bf2, tol, di, rng);
    out.values[i] = tr.real() / out.partition;
  }
  return out;
}

SdpResult sdp_feasibility(const SdpInstance& inst, double delta, const TraceOptions& opt, Rng& rng) {
  require(delta > 0.0 && delta < 1.0, "sdp_feasibility: delta must lie in (0,1)");
  validate(inst, rng, false);
  const index_t n = inst.dim();
  SdpResult out;
  out.budget = oracle::mmw_iterations(n, inst.eps);
  const double theta = inst.eps / 4.0;
  const double dt = delta / (2.0 * static_cast<double>(out.budget));
  out.gibbs.theta = theta;
  for (index_t t = 1; t <= out.budget; ++t) {
    out.iterations = t;
    TraceEstimates est = gibbs_trace_estimates(inst.constraints, theta, out.gibbs.js, dt, opt, rng);
    out.last_estimates = est.values;
    index_t found = inst.b.size();
    for (index_t i = 0; i < inst.b.size(); ++i) {
      if (est.values[i] > inst.b[i] + 0.75 * inst.eps) {
        found = i;
        break;
      }
    }
    if (found == inst.b.size()) {
      out.feasible = true;
      out.gibbs.eig = std::move(est.eig);
      break;
    }
    out.gibbs.js.push_back(found);
  }
  Guarantee& g = out.guarantee;
  g.pipeline = "sdp_feasibility";
  g.eps = inst.eps;
  g.delta = delta;
  g.sizes = {{"budget", out.budget}, {"iterations", out.iterations}, {"n", n}, {"m", inst.b.size()}};
  g.bound = inst.eps + theta;
  g.bound_kind = "max_i Tr[A_i X] - b_i when feasible";
  return out;
}

Mat gibbs_dense(const SdpInstance& inst, const GibbsStateDescription& g) {
  std::vector<Mat> dense;
  dense.reserve(inst.constraints.size());
  for (const auto& a : inst.constraints) dense.push_back(a.dense());
  return oracle::gibbs_state(dense, g.js, g.theta, inst.dim());
}

}  // namespace sqla::apps
