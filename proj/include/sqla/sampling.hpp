#pragma once

#include "sqla/types.hpp"

#include <cstdint>
#include <vector>

namespace sqla {

// Walker/Vose alias table over nonnegative weights. Immutable after build.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& w);

  index_t size() const { return prob_.size(); }
  double total() const { return total_; }
  bool empty() const { return total_ <= 0.0; }
  index_t sample(Rng& rng) const;

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
  double total_ = 0.0;
};

// complete binary tree of partial sums; leaves hold weights
class SumTree {
 public:
  SumTree() = default;
  explicit SumTree(const std::vector<double>& w);

  index_t size() const { return n_; }
  double total() const { return n_ ? node_[1] : 0.0; }
  double weight(index_t i) const { return node_[cap_ + i]; }
  void set(index_t i, double w);
  index_t sample(Rng& rng) const;
  // recomputed sum of leaves, for consistency checks
  double leaf_sum() const;

 private:
  index_t n_ = 0;
  index_t cap_ = 0;
  std::vector<double> node_;
};

}  // namespace sqla
