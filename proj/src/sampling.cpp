#include "sqla/sampling.hpp"

#include <cmath>

namespace sqla {

AliasTable::AliasTable(const std::vector<double>& w) {
  const index_t n = w.size();
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  total_ = 0.0;
  for (double x : w) {
    require(std::isfinite(x) && x >= 0.0, "alias table: weights must be finite and nonnegative");
    total_ += x;
  }
  if (n == 0 || total_ <= 0.0) return;

  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (index_t i = 0; i < n; ++i) {
    scaled[i] = w[i] * static_cast<double>(n) / total_;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    auto s = small.back();
    small.pop_back();
    auto l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // leftovers are 1 up to rounding
  for (auto l : large) { prob_[l] = 1.0; alias_[l] = l; }
  for (auto s : small) {
    // a zero-weight slot must never be returned on its own
    prob_[s] = w[s] > 0.0 ? 1.0 : 0.0;
    alias_[s] = s;
    if (w[s] <= 0.0) {
      // point at any positive-weight index
      for (index_t j = 0; j < n; ++j)
        if (w[j] > 0.0) { alias_[s] = static_cast<std::uint32_t>(j); break; }
    }
  }
}

index_t AliasTable::sample(Rng& rng) const {
  if (empty()) fail(ErrorKind::ZeroNorm, "alias table: no positive weight");
  const double u = uniform01(rng) * static_cast<double>(prob_.size());
  index_t i = std::min<index_t>(static_cast<index_t>(u), prob_.size() - 1);
  const double frac = u - static_cast<double>(i);
  return frac < prob_[i] ? i : alias_[i];
}

SumTree::SumTree(const std::vector<double>& w) : n_(w.size()) {
  cap_ = 1;
  while (cap_ < n_) cap_ <<= 1;
  node_.assign(2 * cap_, 0.0);
  for (index_t i = 0; i < n_; ++i) {
    require(std::isfinite(w[i]) && w[i] >= 0.0, "sum tree: weights must be finite and nonnegative");
    node_[cap_ + i] = w[i];
  }
  for (index_t k = cap_ - 1; k >= 1; --k) node_[k] = node_[2 * k] + node_[2 * k + 1];
}

void SumTree::set(index_t i, double w) {
  require(i < n_, "sum tree: index out of range");
  require(std::isfinite(w) && w >= 0.0, "sum tree: weight must be finite and nonnegative");
  index_t k = cap_ + i;
  node_[k] = w;
  for (k >>= 1; k >= 1; k >>= 1) node_[k] = node_[2 * k] + node_[2 * k + 1];
}

index_t SumTree::sample(Rng& rng) const {
  if (total() <= 0.0) fail(ErrorKind::ZeroNorm, "sum tree: no positive weight");
  index_t k = 1;
  double u = uniform01(rng) * node_[1];
  while (k < cap_) {
    const double left = node_[2 * k];
    if (u < left || node_[2 * k + 1] <= 0.0) {
      k = 2 * k;
    } else {
      u -= left;
      k = 2 * k + 1;
    }
  }
  index_t i = k - cap_;
  // rounding can land on an empty leaf at the edge; walk to a neighbour with mass
  if (node_[k] <= 0.0) {
    for (index_t d = 1; d < n_; ++d) {
      if (i >= d && node_[cap_ + i - d] > 0.0) return i - d;
      if (i + d < n_ && node_[cap_ + i + d] > 0.0) return i + d;
    }
  }
  return i;
}

double SumTree::leaf_sum() const {
  double s = 0.0;
  for (index_t i = 0; i < n_; ++i) s += node_[cap_ + i];
  return s;
}

}  // namespace sqla
