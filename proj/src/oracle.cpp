#include "sqla/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace sqla::oracle {

Mat dense_svt(const Mat& a, const RealFn& f) {
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  Vec fs(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) fs[i] = f(s[i]);
  return svd.matrixU() * fs.asDiagonal() * svd.matrixV().adjoint();
}

Mat dense_even_svt(const Mat& a, const RealFn& f) { return dense_eigen_transform(a.adjoint() * a, f); }

HermitianEig hermitian_eig(const Mat& h) {
  require(h.rows() == h.cols(), "hermitian_eig: matrix is not square");
  HermitianEig out;
  out.asymmetry = 0.5 * (h - h.adjoint()).norm();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

Mat dense_eigen_transform(const Mat& h, const RealFn& f) {
  const HermitianEig e = hermitian_eig(h);
  Vec fv(e.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv[i] = f(e.values[i]);
  return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

Mat expm(const Mat& a) {
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
                             129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
                             1323241920.0,        40840800.0,          960960.0,           16380.0,
                             182.0,               1.0};
  const auto n = a.rows();
  const double theta13 = 5.371920351148152;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  const Mat x = a / std::pow(2.0, s);
  const Mat id = Mat::Identity(n, n);
  const Mat x2 = x * x, x4 = x2 * x2, x6 = x4 * x2;
  const Mat u = x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
  const Mat v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

Vec expm_apply(const Mat& h, const Vec& b, cplx scale) {
  const HermitianEig e = hermitian_eig(h);
  Vec ev(e.values.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::exp(scale * e.values[i]);
  return e.vectors * ev.asDiagonal() * (e.vectors.adjoint() * b);
}

Mat dense_thresholded(const Mat& a, double sigma, double eta, ThresholdKind kind) {
  if (kind == ThresholdKind::LowRank) {
    const ScalarFunction t = fn::step(sigma, eta);
    return a * dense_even_svt(a, t.f);
  }
  const ScalarFunction i = fn::thresholded_inverse(sigma, eta);
  return dense_even_svt(a, i.f) * a.adjoint();
}

index_t mmw_iterations(index_t n, double eps) {
  require(n >= 2 && eps > 0.0, "mmw_iterations: need n >= 2 and eps > 0");
  return static_cast<index_t>(std::ceil(16.0 * std::log(static_cast<double>(n)) / (eps * eps)));
}

Mat gibbs_state(const std::vector<Mat>& constraints, const std::vector<index_t>& js, double theta, index_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  Mat h = Mat::Zero(nn, nn);
  for (index_t j : js) h -= theta * constraints.at(j);
  // shift by the top eigenvalue so the exponential stays bounded
  const HermitianEig e = hermitian_eig(h);
  const double top = e.values.size() ? e.values.maxCoeff() : 0.0;
  Vec ev(e.values.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::exp(e.values[i] - top);
  Mat x = e.vectors * ev.asDiagonal() * e.vectors.adjoint();
  return x / x.trace();
}

MmwReference dense_mmw_reference(const SdpProblem& p) {
  require(!p.constraints.empty() && p.constraints.size() == p.b.size(), "dense_mmw_reference: bad instance");
  const index_t n = static_cast<index_t>(p.constraints[0].rows());
  MmwReference out;
  out.budget = mmw_iterations(n, p.eps);
  const double theta = p.eps / 4.0;
  std::vector<index_t> js;
  Mat x = Mat::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) / static_cast<double>(n);
  for (index_t t = 1; t <= out.budget; ++t) {
    out.iterations = t;
    index_t found = p.b.size();
    for (index_t i = 0; i < p.b.size(); ++i) {
      const double tr = (p.constraints[i] * x).trace().real();
      if (tr > p.b[i] + 0.75 * p.eps) {
        found = i;
        break;
      }
    }
    if (found == p.b.size()) {
      out.feasible = true;
      out.x = x;
      out.violated = js;
      return out;
    }
    js.push_back(found);
    x = gibbs_state(p.constraints, js, theta, n);
  }
  out.feasible = false;
  out.violated = js;
  out.x = x;
  return out;
}

RVec exact_output_distribution(const OversampledVector& v) {
  const index_t n = v.size();
  RVec p(static_cast<Eigen::Index>(n));
  for (index_t i = 0; i < n; ++i) p[static_cast<Eigen::Index>(i)] = abs2(v.query(i));
  const double s = p.sum();
  require(s > 0.0, "exact_output_distribution: vector is zero");
  return p / s;
}

double tv_distance(const RVec& p, const RVec& q) {
  require(p.size() == q.size(), "tv_distance: length mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace sqla::oracle
