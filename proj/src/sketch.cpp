#include "sqla/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sqla {

Mat RowSketch::apply(const Mat& x) const {
  require(static_cast<index_t>(x.rows()) == source, "RowSketch::apply: row count mismatch");
  Mat out(static_cast<Eigen::Index>(size()), x.cols());
  for (index_t k = 0; k < size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(idx[k])) * weight[k];
  return out;
}

RowDist row_norm_dist(std::shared_ptr<const MatrixSampler> a) {
  RowDist d;
  d.n = a->rows();
  d.sample = [a](Rng& rng) { return a->sample_row(rng); };
  d.prob = [a](index_t i) { return a->row_prob(i); };
  return d;
}

RowSketch draw_row_sketch(const RowDist& d, index_t s, Rng& rng, double phi) {
  require(s >= 1, "draw_row_sketch: s must be >= 1");
  RowSketch out;
  out.source = d.n;
  out.phi = phi;
  out.idx.resize(s);
  out.weight.resize(s);
  out.p.resize(s);
  for (index_t k = 0; k < s; ++k) {
    const index_t i = d.sample(rng);
    const double p = d.prob(i);
    require(p > 0.0, "draw_row_sketch: sampled an index of probability zero");
    out.idx[k] = i;
    out.p[k] = p;
    out.weight[k] = 1.0 / std::sqrt(static_cast<double>(s) * p);
  }
  return out;
}

RowSketch draw_row_sketch(const OversampledMatrix& a, index_t s, Rng& rng) {
  const double phi = a.phi_known() ? a.phi() : std::numeric_limits<double>::quiet_NaN();
  return draw_row_sketch(row_norm_dist(a.bound), s, rng, phi);
}

RowSketch draw_joint_sketch(const RowDist& p, const RowDist& q, index_t s, Rng& rng, double phi) {
  require(s >= 1, "draw_joint_sketch: s must be >= 1");
  require(p.n == q.n, "draw_joint_sketch: distributions over different index sets");
  RowSketch out;
  out.source = p.n;
  out.phi = phi;
  out.idx.resize(s);
  out.weight.resize(s);
  out.p.resize(s);
  out.q.resize(s);
  for (index_t k = 0; k < s; ++k) {
    const index_t i = uniform01(rng) < 0.5 ? p.sample(rng) : q.sample(rng);
    out.idx[k] = i;
    out.p[k] = p.prob(i);
    out.q[k] = q.prob(i);
    const double r = 0.5 * (out.p[k] + out.q[k]);
    out.weight[k] = 1.0 / std::sqrt(static_cast<double>(s) * r);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

AliasTable chain_table(const OversampledMatrix& a, const RowSketch& s) {
  std::vector<double> w(s.size());
  for (index_t k = 0; k < s.size(); ++k) w[k] = s.weight[k] * s.weight[k] * a.bound->row_norm2(s.idx[k]);
  return AliasTable(w);
}

}  // namespace

SketchedMatrix::SketchedMatrix(OversampledMatrix a, RowSketch s) : a_(std::move(a)), s_(std::move(s)) {
  require(s_.source == a_.rows(), "SketchedMatrix: sketch built for a different row count");
  chain_ = std::make_shared<const AliasTable>(chain_table(a_, s_));
}

Vec SketchedMatrix::row(index_t k) const {
  Vec r(static_cast<Eigen::Index>(cols()));
  for (index_t j = 0; j < cols(); ++j) r[static_cast<Eigen::Index>(j)] = R(k, j);
  return r;
}

Mat SketchedMatrix::dense() const {
  Mat r(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
  for (index_t k = 0; k < rows(); ++k) r.row(static_cast<Eigen::Index>(k)) = row(k).transpose();
  return r;
}

double SketchedMatrix::bound_frob2() const {
  double t = 0.0;
  for (index_t k = 0; k < rows(); ++k) t += s_.weight[k] * s_.weight[k] * a_.bound->row_norm2(s_.idx[k]);
  return t;
}

index_t SketchedMatrix::sample_column(Rng& rng) const {
  // rows of S Atilde share one norm when S follows the bound's row norms, so k is uniform there
  const index_t k = chain_->sample(rng);
  return a_.bound->sample_in_row(s_.idx[k], rng);
}

double SketchedMatrix::column_prob(index_t j) const {
  double num = 0.0;
  for (index_t k = 0; k < rows(); ++k) num += s_.weight[k] * s_.weight[k] * abs2(a_.bound->query(s_.idx[k], j));
  return num / bound_frob2();
}

RowDist SketchedMatrix::column_dist() const {
  RowDist d;
  d.n = cols();
  auto table = chain_;
  const SketchedMatrix self = *this;
  const double total = bound_frob2();
  d.sample = [self, table](Rng& rng) {
    const index_t k = table->sample(rng);
    return self.a_.bound->sample_in_row(self.s_.idx[k], rng);
  };
  d.prob = [self, total](index_t j) {
    double num = 0.0;
    for (index_t k = 0; k < self.rows(); ++k)
      num += self.s_.weight[k] * self.s_.weight[k] * abs2(self.a_.bound->query(self.s_.idx[k], j));
    return num / total;
  };
  return d;
}

RowSketch SketchedMatrix::draw_column_sketch(index_t c, Rng& rng) const {
  // phi of the column access is ||S Atilde||_F^2 / ||SA||_F^2, unknown without touching all of SA
  return draw_row_sketch(column_dist(), c, rng, std::numeric_limits<double>::quiet_NaN());
}

Mat SketchedMatrix::core(const RowSketch& t) const {
  require(t.source == cols(), "SketchedMatrix::core: column sketch has the wrong source dimension");
  Mat c(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(t.size()));
  for (index_t l = 0; l < t.size(); ++l)
    for (index_t k = 0; k < rows(); ++k)
      c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = R(k, t.idx[l]) * t.weight[l];
  return c;
}

namespace {

// first position of each distinct sketch row and the group of every position
std::pair<std::vector<index_t>, std::vector<index_t>> distinct_rows(const RowSketch& s) {
  std::map<std::pair<index_t, double>, index_t> seen;
  std::vector<index_t> rep, of(s.size());
  for (index_t k = 0; k < s.size(); ++k) {
    auto [it, fresh] = seen.emplace(std::make_pair(s.idx[k], s.weight[k]), rep.size());
    if (fresh) rep.push_back(k);
    of[k] = it->second;
  }
  return {rep, of};
}

}  // namespace

Mat SketchedMatrix::core_times(const RowSketch& t, const Mat& x) const {
  require(t.source == cols() && static_cast<index_t>(x.rows()) == t.size(), "SketchedMatrix::core_times: shape mismatch");
  const auto [rep, of] = distinct_rows(s_);
  Mat d = Mat::Zero(static_cast<Eigen::Index>(rep.size()), x.cols());
  for (size_t g = 0; g < rep.size(); ++g)
    for (index_t l = 0; l < t.size(); ++l)
      d.row(static_cast<Eigen::Index>(g)) += (R(rep[g], t.idx[l]) * t.weight[l]) * x.row(static_cast<Eigen::Index>(l));
  Mat out(static_cast<Eigen::Index>(rows()), x.cols());
  for (index_t k = 0; k < rows(); ++k) out.row(static_cast<Eigen::Index>(k)) = d.row(static_cast<Eigen::Index>(of[k]));
  return out;
}

Mat SketchedMatrix::core_adjoint_times(const RowSketch& t, const Mat& y) const {
  require(t.source == cols() && static_cast<index_t>(y.rows()) == rows(),
          "SketchedMatrix::core_adjoint_times: shape mismatch");
  const auto [rep, of] = distinct_rows(s_);
  Mat ysum = Mat::Zero(static_cast<Eigen::Index>(rep.size()), y.cols());
  for (index_t k = 0; k < rows(); ++k) ysum.row(static_cast<Eigen::Index>(of[k])) += y.row(static_cast<Eigen::Index>(k));
  Mat out = Mat::Zero(static_cast<Eigen::Index>(t.size()), y.cols());
  for (index_t l = 0; l < t.size(); ++l)
    for (size_t g = 0; g < rep.size(); ++g)
      out.row(static_cast<Eigen::Index>(l)) +=
          std::conj(R(rep[g], t.idx[l]) * t.weight[l]) * ysum.row(static_cast<Eigen::Index>(g));
  return out;
}

Vec SketchedMatrix::times(const Vec& b) const {
  require(static_cast<index_t>(b.size()) == cols(), "SketchedMatrix::times: length mismatch");
  Vec out = Vec::Zero(static_cast<Eigen::Index>(rows()));
  for (index_t k = 0; k < rows(); ++k) {
    cplx s = 0.0;
    for (index_t j = 0; j < cols(); ++j) s += R(k, j) * b[static_cast<Eigen::Index>(j)];
    out[static_cast<Eigen::Index>(k)] = s;
  }
  return out;
}

Vec SketchedMatrix::adjoint_times(const Vec& w) const {
  require(static_cast<index_t>(w.size()) == rows(), "SketchedMatrix::adjoint_times: length mismatch");
  Vec out = Vec::Zero(static_cast<Eigen::Index>(cols()));
  for (index_t k = 0; k < rows(); ++k) {
    const cplx wk = w[static_cast<Eigen::Index>(k)];
    if (wk == 0.0) continue;
    for (index_t j = 0; j < cols(); ++j) out[static_cast<Eigen::Index>(j)] += std::conj(R(k, j)) * wk;
  }
  return out;
}

// ---------------------------------------------------------------------------

Mat sketched_product(const RowFn& x, const RowFn& y, const RowSketch& s) {
  require(s.size() >= 1, "sketched_product: empty sketch");
  Vec x0 = x(s.idx[0]), y0 = y(s.idx[0]);
  Mat xs(x0.size(), static_cast<Eigen::Index>(s.size()));
  Mat ys(y0.size(), static_cast<Eigen::Index>(s.size()));
  for (index_t k = 0; k < s.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    xs.col(kk) = (k == 0 ? x0 : x(s.idx[k])) * s.weight[k];
    ys.col(kk) = (k == 0 ? y0 : y(s.idx[k])) * s.weight[k];
  }
  return xs.conjugate() * ys.transpose();
}

namespace {

double product_bound(const RowSketch& s, const std::function<double(index_t)>& xr,
                     const std::function<double(index_t)>& yr) {
  double t = 0.0;
  for (index_t k = 0; k < s.size(); ++k) {
    const double w2 = s.weight[k] * s.weight[k];
    t += w2 * xr(s.idx[k]) * w2 * yr(s.idx[k]);
  }
  return static_cast<double>(s.size()) * t;
}

}  // namespace

MatmulResult approx_matmul_onesided(const OversampledMatrix& x, const Mat& y, index_t s, Rng& rng) {
  require(static_cast<index_t>(y.rows()) == x.rows(), "approx_matmul_onesided: row count mismatch");
  MatmulResult out;
  out.sketch = draw_row_sketch(x, s, rng);
  out.product = sketched_product([&](index_t i) { return x.row(i); },
                                 [&](index_t i) -> Vec { return y.row(static_cast<Eigen::Index>(i)).transpose(); },
                                 out.sketch);
  out.bound_frob2 = product_bound(
      out.sketch, [&](index_t i) { return x.bound->row_norm2(i); },
      [&](index_t i) { return y.row(static_cast<Eigen::Index>(i)).squaredNorm(); });
  return out;
}

MatmulResult approx_matmul_joint(const OversampledMatrix& x, const OversampledMatrix& y, index_t s, Rng& rng) {
  require(x.rows() == y.rows(), "approx_matmul_joint: row count mismatch");
  MatmulResult out;
  double phi = std::numeric_limits<double>::quiet_NaN();
  if (x.phi_known() && y.phi_known()) phi = x.phi() * y.phi();
  out.sketch = draw_joint_sketch(row_norm_dist(x.bound), row_norm_dist(y.bound), s, rng, phi);
  out.product = sketched_product([&](index_t i) { return x.row(i); }, [&](index_t i) { return y.row(i); },
                                 out.sketch);
  out.bound_frob2 = product_bound(
      out.sketch, [&](index_t i) { return x.bound->row_norm2(i); },
      [&](index_t i) { return y.bound->row_norm2(i); });
  return out;
}

index_t joint_matmul_size(double phi1, double phi2, double eps, double delta) {
  require(eps > 0.0 && delta > 0.0 && delta <= 1.0, "joint_matmul_size: need eps > 0 and delta in (0,1]");
  return static_cast<index_t>(std::ceil(8.0 * phi1 * phi2 * std::log(2.0 / delta) / (eps * eps)));
}

GramCertificate approx_gram_spectral(const OversampledMatrix& a, index_t s, double delta, double spectral_norm,
                                     Rng& rng, double constant) {
  require(s >= 2, "approx_gram_spectral: s must be >= 2");
  require(delta > 0.0 && delta < 1.0, "approx_gram_spectral: delta must lie in (0,1)");
  GramCertificate out;
  out.sketch = draw_row_sketch(a, s, rng);
  out.phi = a.phi_known() ? a.phi() : 1.0;
  SketchedMatrix r(a, out.sketch);
  Mat rd = r.dense();
  out.gram = rd.adjoint() * rd;
  const double frob = std::sqrt(a.frob2 ? *a.frob2 : a.bound_frob2());
  out.constant = constant;
  out.bound = constant *
              std::sqrt(out.phi * out.phi * std::log(static_cast<double>(s)) * std::log(1.0 / delta) /
                        static_cast<double>(s)) *
              spectral_norm * frob;
  return out;
}

RVec estimate_singular_values(const OversampledMatrix& a, index_t r, index_t c, Rng& rng) {
  require(r >= 1 && c >= 1, "estimate_singular_values: r and c must be >= 1");
  SketchedMatrix sa(a, draw_row_sketch(a, r, rng));
  RowSketch t = sa.draw_column_sketch(c, rng);
  return small_svd(sa.core(t)).s;
}

// ---------------------------------------------------------------------------

SmallSvd small_svd(const Mat& c) {
  Eigen::BDCSVD<Mat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  std::vector<Eigen::Index> order(static_cast<size_t>(s.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return s[a] > s[b]; });
  SmallSvd out;
  out.u.resize(c.rows(), s.size());
  out.v.resize(c.cols(), s.size());
  out.s.resize(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    out.s[k] = s[order[static_cast<size_t>(k)]];
    out.u.col(k) = svd.matrixU().col(order[static_cast<size_t>(k)]);
    out.v.col(k) = svd.matrixV().col(order[static_cast<size_t>(k)]);
  }
  return out;
}

IsometryFactor projective_isometry_factor(const Mat& r, const Mat& c, double threshold, index_t k) {
  require(r.rows() == c.rows(), "projective_isometry_factor: R and C row counts differ");
  IsometryFactor out;
  SmallSvd svd = small_svd(c);
  index_t keep = 0;
  while (keep < static_cast<index_t>(svd.s.size()) && svd.s[static_cast<Eigen::Index>(keep)] >= threshold &&
         svd.s[static_cast<Eigen::Index>(keep)] > 0.0)
    ++keep;
  if (k > 0) keep = std::min(keep, k);
  out.rank = keep;
  if (keep == 0) {
    out.empty = true;
    out.factor = Mat::Zero(c.cols(), r.cols());
    out.isometry = Mat::Zero(0, r.cols());
    return out;
  }
  const auto kk = static_cast<Eigen::Index>(keep);
  RVec dinv = svd.s.head(kk).cwiseInverse();
  out.isometry = dinv.asDiagonal() * (svd.u.leftCols(kk).adjoint() * r);
  out.factor = svd.v.leftCols(kk) * out.isometry;
  // F F^dagger - V_k V_k^dagger = V_k (G - I) V_k^dagger, so both reduce to the k x k Gram
  Mat g = out.isometry * out.isometry.adjoint();
  out.alpha_isometry = (g - Mat::Identity(kk, kk)).operatorNorm();
  out.alpha_projective = out.alpha_isometry;
  return out;
}

// ---------------------------------------------------------------------------

void write_sketch(std::ostream& os, const RowSketch& s) {
  os.precision(17);
  os << "# source " << s.source << " rows " << s.size() << " phi " << s.phi << " seed " << s.seed << "\n";
  for (index_t k = 0; k < s.size(); ++k) os << s.idx[k] << " " << s.weight[k] << "\n";
}

RowSketch read_sketch(std::istream& is) {
  RowSketch s;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      while (hs >> key) {
        if (key == "source") hs >> s.source;
        else if (key == "phi") hs >> s.phi;
        else if (key == "seed") hs >> s.seed;
        else {
          std::string skip;
          hs >> skip;
        }
      }
      continue;
    }
    std::istringstream ls(line);
    index_t i;
    double w;
    if (!(ls >> i >> w)) fail(ErrorKind::Io, "read_sketch: malformed line '" + line + "'");
    s.idx.push_back(i);
    s.weight.push_back(w);
  }
  const double n = static_cast<double>(s.idx.size());
  for (double w : s.weight) s.p.push_back(1.0 / (n * w * w));
  return s;
}

}  // namespace sqla
