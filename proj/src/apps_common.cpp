#include "apps_internal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sqla::apps {

std::string describe(const Guarantee& g) {
  std::ostringstream os;
  os << g.pipeline << ": eps=" << g.eps << " delta=" << g.delta << " bound=" << g.bound;
  if (!g.bound_kind.empty()) os << " (" << g.bound_kind << ")";
  for (const auto& [k, v] : g.sizes) os << " " << k << "=" << v;
  for (std::uint64_t s : g.seeds) os << " seed=" << s;
  return os.str();
}

void validate(const ThresholdSpec& s) {
  require(s.sigma > 0.0, "threshold: sigma must be positive");
  require(s.eta > 0.0 && s.eta <= 0.99, "threshold: eta must lie in (0, 0.99]");
}

namespace detail {

void RowTerms::add_rows(const OversampledMatrix& a, const RowSketch& s, const Vec& coeffs) {
  require(static_cast<index_t>(coeffs.size()) == s.size(), "row terms: coefficient length mismatch");
  std::map<index_t, cplx> merged;
  for (index_t k = 0; k < s.size(); ++k) {
    const cplx c = coeffs[static_cast<Eigen::Index>(k)] * s.weight[k];
    if (c != 0.0) merged[s.idx[k]] += c;
  }
  add_rows(a, merged);
}

void RowTerms::add_rows(const OversampledMatrix& a, const std::map<index_t, cplx>& merged) {
  for (auto [i, c] : merged) {
    if (c == 0.0) continue;
    vs.push_back(row_vector(a, i, true));
    ls.push_back(c);
  }
}

void RowTerms::add(const OversampledVector& v, cplx c) {
  if (c == 0.0) return;
  vs.push_back(v);
  ls.push_back(c);
}

OversampledVector RowTerms::combine() const {
  if (vs.empty()) fail(ErrorKind::ZeroNorm, "output is identically zero");
  return linear_combination(vs, ls);
}

double frob2_of(const OversampledMatrix& a) { return a.frob2 ? *a.frob2 : a.bound_frob2(); }

double norm2_of(const OversampledVector& v) { return v.norm2 ? *v.norm2 : v.bound_norm2(); }

double spectral_or_estimate(const OversampledMatrix& a, double given, Rng& rng) {
  if (given > 0.0) return given;
  return estimate_spectral_norm(a, rng);
}

index_t clamp_count(double v, index_t lo, index_t hi) {
  if (!std::isfinite(v)) return hi;
  return static_cast<index_t>(std::clamp(std::ceil(v), static_cast<double>(lo), static_cast<double>(hi)));
}

double log_inv(double delta) { return std::max(std::log(1.0 / delta), 1.0); }

}  // namespace detail

}  // namespace sqla::apps
