#pragma once

#include "sqla/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace testing {

using sqla::cplx;
using sqla::Mat;
using sqla::Rng;
using sqla::Vec;

inline Vec random_vec(Rng& rng, Eigen::Index n, bool complex_entries = true) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(g(rng), complex_entries ? g(rng) : 0.0);
  return v;
}

inline Mat random_mat(Rng& rng, Eigen::Index m, Eigen::Index n, bool complex_entries = true) {
  std::normal_distribution<double> g;
  Mat a(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) a(i, j) = cplx(g(rng), complex_entries ? g(rng) : 0.0);
  return a;
}

// upper quantile of chi-square via Wilson-Hilferty
inline double chi2_critical(double df, double z = 3.090232306) {
  const double t = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - t + z * std::sqrt(t), 3.0);
}

struct Chi2 {
  double stat = 0.0;
  double df = 0.0;
  bool pass(double z = 3.090232306) const { return stat <= chi2_critical(df, z); }
};

// bins with expected count below 5 are pooled into one
inline Chi2 chi_square(const std::vector<double>& counts, const std::vector<double>& probs, double draws) {
  Chi2 out;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  int bins = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * draws;
    if (e < 5.0) {
      pooled_obs += counts[i];
      pooled_exp += e;
      continue;
    }
    out.stat += (counts[i] - e) * (counts[i] - e) / e;
    ++bins;
  }
  if (pooled_exp > 0.0) {
    out.stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / std::max(pooled_exp, 1e-300);
    ++bins;
  }
  out.df = std::max(1, bins - 1);
  return out;
}

// U diag(sv) V^dagger with random orthonormal U, V
inline Mat low_rank(Rng& rng, Eigen::Index m, Eigen::Index n, const std::vector<double>& sv) {
  const auto k = static_cast<Eigen::Index>(sv.size());
  Eigen::HouseholderQR<Mat> qu(random_mat(rng, m, k)), qv(random_mat(rng, n, k));
  Mat u = qu.householderQ() * Mat::Identity(m, k);
  Mat v = qv.householderQ() * Mat::Identity(n, k);
  sqla::RVec s(k);
  for (Eigen::Index i = 0; i < k; ++i) s[i] = sv[static_cast<size_t>(i)];
  return u * s.asDiagonal() * v.adjoint();
}

// V diag(ev) V^dagger with random orthonormal V
inline Mat hermitian_low_rank(Rng& rng, Eigen::Index n, const std::vector<double>& ev, bool complex_entries = true) {
  const auto k = static_cast<Eigen::Index>(ev.size());
  Eigen::HouseholderQR<Mat> qv(random_mat(rng, n, k, complex_entries));
  Mat v = qv.householderQ() * Mat::Identity(n, k);
  sqla::RVec s(k);
  for (Eigen::Index i = 0; i < k; ++i) s[i] = ev[static_cast<size_t>(i)];
  Mat h = v * s.asDiagonal() * v.adjoint();
  return 0.5 * (h + h.adjoint());
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testing
