#pragma once

#include "sqla/apps.hpp"

#include <map>
#include <vector>

namespace sqla::apps::detail {

// sum_k c_k conj(a(idx_k, .)) w_k, merged by row index
struct RowTerms {
  std::vector<OversampledVector> vs;
  std::vector<cplx> ls;

  void add_rows(const OversampledMatrix& a, const RowSketch& s, const Vec& coeffs);
  void add_rows(const OversampledMatrix& a, const std::map<index_t, cplx>& merged);
  void add(const OversampledVector& v, cplx c);
  bool empty() const { return vs.empty(); }
  OversampledVector combine() const;
};

double frob2_of(const OversampledMatrix& a);
double norm2_of(const OversampledVector& v);
double spectral_or_estimate(const OversampledMatrix& a, double given, Rng& rng);
index_t clamp_count(double v, index_t lo, index_t hi);
double log_inv(double delta);

}  // namespace sqla::apps::detail
