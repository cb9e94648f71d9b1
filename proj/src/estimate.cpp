#include "sqla/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace sqla {

namespace {

double median_of(std::vector<double>& v) {
  const size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(n / 2));
  return 0.5 * (lo + hi);
}

template <class Draw>
cplx median_of_means(const InnerProductPlan& plan, Rng& rng, Draw&& draw) {
  std::vector<double> re(plan.groups), im(plan.groups);
  for (index_t g = 0; g < plan.groups; ++g) {
    cplx s = 0.0;
    for (index_t k = 0; k < plan.per_mean; ++k) s += draw(rng);
    s /= static_cast<double>(plan.per_mean);
    re[g] = s.real();
    im[g] = s.imag();
  }
  return {median_of(re), median_of(im)};
}

}  // namespace

InnerProductPlan inner_product_plan(double bound_norm2, double v_norm2, double eps, double delta) {
  require(eps > 0.0, "inner product: eps must be positive");
  require(delta > 0.0 && delta < 1.0, "inner product: delta must lie in (0,1)");
  require(std::isfinite(v_norm2) && v_norm2 >= 0.0, "inner product: a finite bound on ||v||^2 is required");
  InnerProductPlan p;
  p.groups = std::max<index_t>(1, static_cast<index_t>(std::ceil(8.0 * std::log(1.0 / delta))));
  p.per_mean = std::max<index_t>(1, static_cast<index_t>(std::ceil(8.0 * bound_norm2 * v_norm2 / (eps * eps))));
  require(static_cast<double>(p.groups) * static_cast<double>(p.per_mean) < 4e9,
          "inner product: sample budget too large for the requested accuracy");
  return p;
}

cplx inner_product_estimate(const OversampledVector& u, const EntryFn& v, double v_norm2, double eps,
                            double delta, Rng& rng) {
  const double b2 = u.bound_norm2();
  const auto plan = inner_product_plan(b2, v_norm2, eps, delta);
  return median_of_means(plan, rng, [&](Rng& r) {
    const index_t i = u.bound->sample(r);
    const double p = abs2(u.bound->query(i)) / b2;
    return std::conj(u.query(i)) * v(i) / p;
  });
}

cplx trace_product_estimate(const OversampledMatrix& a, const MatEntryFn& b, index_t b_rows, index_t b_cols,
                            double b_frob2, double eps, double delta, Rng& rng) {
  require(b_rows == a.rows() && b_cols == a.cols(), "trace_product_estimate: shape mismatch");
  const double b2 = a.bound_frob2();
  const auto plan = inner_product_plan(b2, b_frob2, eps, delta);
  const cplx inner = median_of_means(plan, rng, [&](Rng& r) {
    auto [i, j] = a.bound->sample_entry(r);
    const double p = abs2(a.bound->query(i, j)) / b2;
    return std::conj(a.query(i, j)) * b(i, j) / p;
  });
  return std::conj(inner);
}

cplx bilinear_form_estimate(const Vec& x, const OversampledMatrix& a, const Vec& y, double eps, double delta,
                            Rng& rng) {
  require(static_cast<index_t>(x.size()) == a.rows() && static_cast<index_t>(y.size()) == a.cols(),
          "bilinear_form_estimate: shape mismatch");
  // x^dagger A y = Tr[A B^dagger] with B = x y^dagger
  auto b = [&](index_t i, index_t j) {
    return x[static_cast<Eigen::Index>(i)] * std::conj(y[static_cast<Eigen::Index>(j)]);
  };
  return trace_product_estimate(a, b, a.rows(), a.cols(), x.squaredNorm() * y.squaredNorm(), eps, delta, rng);
}

// ---------------------------------------------------------------------------

EntryPool::EntryPool(const OversampledMatrix& a, index_t per_mean, index_t groups, Rng& rng)
    : per_mean_(std::max<index_t>(per_mean, 1)), groups_(std::max<index_t>(groups, 1)) {
  const index_t t = per_mean_ * groups_;
  const double b2 = a.bound_frob2();
  rows_.resize(t);
  cols_.resize(t);
  vals_.resize(t);
  for (index_t k = 0; k < t; ++k) {
    auto [i, j] = a.bound->sample_entry(rng);
    rows_[k] = i;
    cols_[k] = j;
    vals_[k] = a.query(i, j) * b2 / abs2(a.bound->query(i, j));
  }
}

cplx EntryPool::estimate(const Vec& x, const Vec& y) const {
  std::vector<double> re(groups_), im(groups_);
  for (index_t g = 0; g < groups_; ++g) {
    cplx s = 0.0;
    for (index_t k = g * per_mean_; k < (g + 1) * per_mean_; ++k)
      s += std::conj(x[static_cast<Eigen::Index>(rows_[k])]) * vals_[k] * y[static_cast<Eigen::Index>(cols_[k])];
    s /= static_cast<double>(per_mean_);
    re[g] = s.real();
    im[g] = s.imag();
  }
  return {median_of(re), median_of(im)};
}

Mat EntryPool::estimate_block(const Mat& x_rows, const Mat& y_rows) const {
  return estimate_block(
      static_cast<index_t>(x_rows.rows()), [&](index_t k) -> Vec { return x_rows.col(static_cast<Eigen::Index>(k)); },
      static_cast<index_t>(y_rows.rows()), [&](index_t l) -> Vec { return y_rows.col(static_cast<Eigen::Index>(l)); });
}

index_t EntryPool::distinct_columns() const {
  std::vector<index_t> all(rows_);
  all.insert(all.end(), cols_.begin(), cols_.end());
  std::sort(all.begin(), all.end());
  return static_cast<index_t>(std::unique(all.begin(), all.end()) - all.begin());
}

Mat EntryPool::estimate_block(index_t x_count, const ColFn& x_col, index_t y_count, const ColFn& y_col) const {
  const auto a = static_cast<Eigen::Index>(x_count), b = static_cast<Eigen::Index>(y_count);
  std::unordered_map<index_t, Vec> xc, yc;
  auto xget = [&](index_t k) -> const Vec& {
    auto it = xc.find(k);
    if (it == xc.end()) it = xc.emplace(k, x_col(k)).first;
    return it->second;
  };
  auto yget = [&](index_t l) -> const Vec& {
    auto it = yc.find(l);
    if (it == yc.end()) it = yc.emplace(l, y_col(l)).first;
    return it->second;
  };
  std::vector<Mat> per_group;
  per_group.reserve(groups_);
  for (index_t g = 0; g < groups_; ++g) {
    // rows of the group's sparse A estimate, each folded against Y once
    std::unordered_map<index_t, Eigen::Index> slot;
    std::vector<index_t> order;
    for (index_t t = g * per_mean_; t < (g + 1) * per_mean_; ++t)
      if (slot.emplace(rows_[t], static_cast<Eigen::Index>(order.size())).second) order.push_back(rows_[t]);
    const auto d = static_cast<Eigen::Index>(order.size());
    Mat w = Mat::Zero(d, b);
    for (index_t t = g * per_mean_; t < (g + 1) * per_mean_; ++t)
      w.row(slot[rows_[t]]) += yget(cols_[t]).transpose() * (vals_[t] / static_cast<double>(per_mean_));
    Mat xg(a, d);
    for (Eigen::Index k = 0; k < d; ++k) xg.col(k) = xget(order[static_cast<size_t>(k)]);
    per_group.push_back(xg * w);
  }
  Mat out(a, b);
  std::vector<double> re(groups_), im(groups_);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < a; ++i) {
      for (index_t g = 0; g < groups_; ++g) {
        re[g] = per_group[g](i, j).real();
        im[g] = per_group[g](i, j).imag();
      }
      out(i, j) = cplx(median_of(re), median_of(im));
    }
  return out;
}

Vec sketched_row_products(const SketchedMatrix& r, const OversampledVector& b, double eps, double delta, Rng& rng) {
  require(b.size() == r.cols(), "sketched_row_products: length mismatch");
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, "sketched_row_products: need eps > 0 and delta in (0,1)");
  const double b2 = b.bound_norm2();
  // E||Z||^2 <= ||R||_F^2 ||btilde||^2; Chebyshev at eps/3 with failure 1/8 per group
  const double x = std::ceil(72.0 * r.bound_frob2() * b2 / (eps * eps));
  const double y = std::ceil(8.0 * std::log(1.0 / delta));
  require(x * y < 4e9, "sketched_row_products: sample budget too large");
  const auto per = static_cast<index_t>(x);
  const auto groups = std::max<index_t>(static_cast<index_t>(y), 1);
  const auto rows = static_cast<Eigen::Index>(r.rows());
  std::unordered_map<index_t, Vec> cols;
  std::vector<Vec> means;
  for (index_t g = 0; g < groups; ++g) {
    std::unordered_map<index_t, double> count;
    for (index_t t = 0; t < per; ++t) count[b.bound->sample(rng)] += 1.0;
    Vec m = Vec::Zero(rows);
    for (auto [j, cnt] : count) {
      auto it = cols.find(j);
      if (it == cols.end()) {
        Vec c(rows);
        for (index_t k = 0; k < r.rows(); ++k) c[static_cast<Eigen::Index>(k)] = r.R(k, j);
        it = cols.emplace(j, std::move(c)).first;
      }
      const double p = abs2(b.bound->query(j)) / b2;
      m += it->second * (b.query(j) * (cnt / (static_cast<double>(per) * p)));
    }
    means.push_back(std::move(m));
  }
  index_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (index_t g = 0; g < groups; ++g) {
    std::vector<double> d(groups);
    for (index_t h = 0; h < groups; ++h) d[h] = (means[g] - means[h]).norm();
    const double score = median_of(d);
    if (score < best_score) {
      best_score = score;
      best = g;
    }
  }
  return means[best];
}

}  // namespace sqla
