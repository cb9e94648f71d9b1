#include "sqla/sq_access.hpp"

#include <cmath>
#include <limits>

namespace sqla {

double VectorSampler::norm() const { return std::sqrt(norm2()); }

namespace {

std::vector<double> squared_magnitudes(const Vec& v) {
  std::vector<double> w(static_cast<size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    require(std::isfinite(v[i].real()) && std::isfinite(v[i].imag()), "vector has non-finite entries");
    w[static_cast<size_t>(i)] = abs2(v[i]);
  }
  return w;
}

}  // namespace

SqVector::SqVector(const Vec& v, Mode mode) : v_(v), mode_(mode) {
  require(v.size() >= 1, "SqVector: empty vector");
  auto w = squared_magnitudes(v);
  norm2_ = 0.0;
  for (double x : w) norm2_ += x;
  if (norm2_ <= 0.0) fail(ErrorKind::ZeroNorm, "SqVector: all-zero vector has no sampling distribution");
  if (mode == Mode::Static)
    alias_ = AliasTable(w);
  else
    tree_ = SumTree(w);
}

index_t SqVector::sample(Rng& rng) const {
  return mode_ == Mode::Static ? alias_.sample(rng) : tree_.sample(rng);
}

double SqVector::norm2() const { return mode_ == Mode::Static ? norm2_ : tree_.total(); }

void SqVector::update_entry(index_t i, cplx val) {
  if (mode_ != Mode::Dynamic) fail(ErrorKind::Unsupported, "update_entry requires a dynamic SqVector");
  require(i < size(), "update_entry: index out of range");
  require(std::isfinite(val.real()) && std::isfinite(val.imag()), "update_entry: non-finite value");
  v_[static_cast<Eigen::Index>(i)] = val;
  tree_.set(i, abs2(val));
}

double SqVector::root_weight() const { return norm2(); }

double SqVector::leaf_weight_sum() const {
  if (mode_ == Mode::Dynamic) return tree_.leaf_sum();
  return v_.squaredNorm();
}

// ---------------------------------------------------------------------------

SqMatrix::SqMatrix(const Mat& A, Mode mode) : mode_(mode) {
  require(A.rows() >= 1 && A.cols() >= 1, "SqMatrix: empty matrix");
  // tiled copy into row-major storage
  a_.resize(A.rows(), A.cols());
  constexpr Eigen::Index kTile = 64;
  for (Eigen::Index j0 = 0; j0 < A.cols(); j0 += kTile)
    for (Eigen::Index i0 = 0; i0 < A.rows(); i0 += kTile) {
      const Eigen::Index bi = std::min(kTile, A.rows() - i0), bj = std::min(kTile, A.cols() - j0);
      a_.block(i0, j0, bi, bj) = A.block(i0, j0, bi, bj);
    }
  const index_t m = rows(), n = cols();
  row_norm2_.assign(m, 0.0);
  std::vector<double> w(n);
  if (mode == Mode::Static)
    row_alias_.resize(m);
  else
    row_tree_.resize(m);
  for (index_t i = 0; i < m; ++i) {
    double s = 0.0;
    const cplx* row = a_.data() + i * n;
    for (index_t j = 0; j < n; ++j) {
      require(std::isfinite(row[j].real()) && std::isfinite(row[j].imag()), "SqMatrix: non-finite entry");
      w[j] = abs2(row[j]);
      s += w[j];
    }
    row_norm2_[i] = s;
    if (mode == Mode::Static)
      row_alias_[i] = AliasTable(w);
    else
      row_tree_[i] = SumTree(w);
  }
  frob2_ = 0.0;
  for (double x : row_norm2_) frob2_ += x;
  if (frob2_ <= 0.0) fail(ErrorKind::ZeroNorm, "SqMatrix: all-zero matrix has no sampling distribution");
  if (mode == Mode::Static)
    norm_alias_ = AliasTable(row_norm2_);
  else
    norm_tree_ = SumTree(row_norm2_);
}

double SqMatrix::frob2() const { return mode_ == Mode::Static ? frob2_ : norm_tree_.total(); }

index_t SqMatrix::sample_row(Rng& rng) const {
  return mode_ == Mode::Static ? norm_alias_.sample(rng) : norm_tree_.sample(rng);
}

index_t SqMatrix::sample_in_row(index_t i, Rng& rng) const {
  return mode_ == Mode::Static ? row_alias_[i].sample(rng) : row_tree_[i].sample(rng);
}

void SqMatrix::update_entry(index_t i, index_t j, cplx val) {
  if (mode_ != Mode::Dynamic) fail(ErrorKind::Unsupported, "update_entry requires a dynamic SqMatrix");
  require(i < rows() && j < cols(), "update_entry: index out of range");
  a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = val;
  row_tree_[i].set(j, abs2(val));
  row_norm2_[i] = row_tree_[i].total();
  norm_tree_.set(i, row_norm2_[i]);
}

RVec SqMatrix::row_norms() const {
  RVec r(static_cast<Eigen::Index>(rows()));
  for (index_t i = 0; i < rows(); ++i) r[static_cast<Eigen::Index>(i)] = std::sqrt(row_norm2_[i]);
  return r;
}

// ---------------------------------------------------------------------------

double OversampledVector::phi() const {
  if (!norm2) return std::numeric_limits<double>::quiet_NaN();
  if (*norm2 <= 0.0) return std::numeric_limits<double>::infinity();
  return bound_norm2() / *norm2;
}

Vec OversampledVector::dense() const {
  Vec v(static_cast<Eigen::Index>(size()));
  for (index_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = entry(i);
  return v;
}

OversampledVector OversampledVector::conj() const {
  OversampledVector out = *this;
  auto e = entry;
  out.entry = [e](index_t i) { return std::conj(e(i)); };
  return out;
}

OversampledVector OversampledVector::exact(std::shared_ptr<const SqVector> v) {
  OversampledVector out;
  out.entry = [v](index_t i) { return v->query(i); };
  out.norm2 = v->norm2();
  out.bound = std::move(v);
  return out;
}

double OversampledMatrix::phi() const {
  if (!frob2) return std::numeric_limits<double>::quiet_NaN();
  if (*frob2 <= 0.0) return std::numeric_limits<double>::infinity();
  return bound_frob2() / *frob2;
}

Vec OversampledMatrix::row(index_t i) const {
  Vec r(static_cast<Eigen::Index>(cols()));
  for (index_t j = 0; j < cols(); ++j) r[static_cast<Eigen::Index>(j)] = entry(i, j);
  return r;
}

Mat OversampledMatrix::dense() const {
  Mat a(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
  for (index_t i = 0; i < rows(); ++i)
    for (index_t j = 0; j < cols(); ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry(i, j);
  return a;
}

OversampledMatrix OversampledMatrix::exact(std::shared_ptr<const SqMatrix> a) {
  OversampledMatrix out;
  const SqMatrix* raw = a.get();
  out.entry = [raw, keep = a](index_t i, index_t j) { return raw->query(i, j); };
  out.frob2 = a->frob2();
  out.bound = std::move(a);
  return out;
}

OversampledVector row_vector(const OversampledMatrix& a, index_t i, bool conjugate) {
  OversampledVector out;
  auto e = a.entry;
  if (conjugate)
    out.entry = [e, i](index_t j) { return std::conj(e(i, j)); };
  else
    out.entry = [e, i](index_t j) { return e(i, j); };
  out.bound = std::make_shared<RowView>(a.bound, i);
  // for exact handles the bound row is the row itself
  if (a.frob2 && a.bound_frob2() == *a.frob2) out.norm2 = a.bound->row_norm2(i);
  return out;
}

// ---------------------------------------------------------------------------

OversampledVector bounded_access(EntryFn entry, std::shared_ptr<const VectorSampler> bound,
                                 std::optional<double> norm2, Rng& rng, index_t probes) {
  const index_t n = bound->size();
  for (index_t p = 0; p < probes; ++p) {
    index_t i = uniform_index(rng, n);
    if (std::abs(entry(i)) > std::abs(bound->query(i)) * (1.0 + 1e-12) + 1e-300)
      fail(ErrorKind::InvariantViolation, "bounded_access: bound smaller than entry at index " + std::to_string(i));
  }
  if (norm2) require(*norm2 <= bound->norm2() * (1.0 + 1e-10), "bounded_access: ||v|| exceeds ||bound||");
  return OversampledVector{std::move(entry), std::move(bound), norm2};
}

OversampledMatrix bounded_access(MatEntryFn entry, std::shared_ptr<const MatrixSampler> bound,
                                 std::optional<double> frob2, Rng& rng, index_t probes) {
  for (index_t p = 0; p < probes; ++p) {
    index_t i = uniform_index(rng, bound->rows());
    index_t j = uniform_index(rng, bound->cols());
    if (std::abs(entry(i, j)) > std::abs(bound->query(i, j)) * (1.0 + 1e-12) + 1e-300)
      fail(ErrorKind::InvariantViolation, "bounded_access: bound smaller than entry at (" + std::to_string(i) +
                                              "," + std::to_string(j) + ")");
  }
  if (frob2) require(*frob2 <= bound->frob2() * (1.0 + 1e-10), "bounded_access: ||A||_F exceeds ||bound||_F");
  return OversampledMatrix{std::move(entry), std::move(bound), frob2};
}

index_t rejection_rounds(double phi, double delta) {
  require(delta > 0.0 && delta < 1.0, "rejection_rounds: delta must lie in (0,1)");
  require(phi >= 1.0 - 1e-12, "rejection_rounds: phi must be >= 1");
  return static_cast<index_t>(std::max(1.0, std::ceil(2.0 * phi * std::log(1.0 / delta))));
}

RejectionOutcome rejection_sample(const OversampledVector& u, index_t max_rounds, Rng& rng) {
  RejectionOutcome out;
  for (out.rounds = 1; out.rounds <= max_rounds; ++out.rounds) {
    index_t i = u.bound->sample(rng);
    const double b2 = abs2(u.bound->query(i));
    const double v2 = abs2(u.query(i));
    if (uniform01(rng) * b2 < v2) {
      out.index = i;
      return out;
    }
  }
  out.rounds = max_rounds;
  return out;
}

double estimate_norm(const OversampledVector& u, double nu, double delta, Rng& rng,
                     std::optional<double> phi_bound) {
  require(nu > 0.0 && nu <= 1.0, "estimate_norm: nu must lie in (0,1]");
  require(delta > 0.0 && delta <= 1.0, "estimate_norm: delta must lie in (0,1]");
  double phi = phi_bound ? *phi_bound : u.phi();
  require(std::isfinite(phi), "estimate_norm: phi unknown; supply phi_bound");
  const auto z = static_cast<index_t>(std::ceil(8.0 * phi * std::log(2.0 / delta) / (nu * nu)));
  index_t accepted = 0;
  for (index_t k = 0; k < std::max<index_t>(z, 1); ++k) {
    index_t i = u.bound->sample(rng);
    if (uniform01(rng) * abs2(u.bound->query(i)) < abs2(u.query(i))) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(std::max<index_t>(z, 1)) * u.bound_norm2();
}

// ---------------------------------------------------------------------------

namespace {

class LinCombBound final : public VectorSampler {
 public:
  LinCombBound(std::vector<std::shared_ptr<const VectorSampler>> parts, std::vector<double> w2)
      : parts_(std::move(parts)), w2_(std::move(w2)) {
    k_ = static_cast<double>(parts_.size());
    std::vector<double> mass(parts_.size());
    norm2_ = 0.0;
    for (size_t t = 0; t < parts_.size(); ++t) {
      mass[t] = w2_[t] * parts_[t]->norm2();
      norm2_ += mass[t];
    }
    norm2_ *= k_;
    pick_ = AliasTable(mass);
  }
  index_t size() const override { return parts_.front()->size(); }
  cplx query(index_t i) const override {
    double s = 0.0;
    for (size_t t = 0; t < parts_.size(); ++t) s += w2_[t] * abs2(parts_[t]->query(i));
    return {std::sqrt(k_ * s), 0.0};
  }
  index_t sample(Rng& rng) const override { return parts_[pick_.sample(rng)]->sample(rng); }
  double norm2() const override { return norm2_; }

 private:
  std::vector<std::shared_ptr<const VectorSampler>> parts_;
  std::vector<double> w2_;
  double k_ = 1.0;
  double norm2_ = 0.0;
  AliasTable pick_;
};

class OuterBound final : public MatrixSampler {
 public:
  OuterBound(std::shared_ptr<const VectorSampler> u, std::shared_ptr<const VectorSampler> v)
      : u_(std::move(u)), v_(std::move(v)) {}
  index_t rows() const override { return u_->size(); }
  index_t cols() const override { return v_->size(); }
  cplx query(index_t i, index_t j) const override { return u_->query(i) * std::conj(v_->query(j)); }
  double row_norm2(index_t i) const override { return abs2(u_->query(i)) * v_->norm2(); }
  double frob2() const override { return u_->norm2() * v_->norm2(); }
  index_t sample_row(Rng& rng) const override { return u_->sample(rng); }
  index_t sample_in_row(index_t, Rng& rng) const override { return v_->sample(rng); }

 private:
  std::shared_ptr<const VectorSampler> u_, v_;
};

class MatLinCombBound final : public MatrixSampler {
 public:
  MatLinCombBound(std::vector<std::shared_ptr<const MatrixSampler>> parts, std::vector<double> w2)
      : parts_(std::move(parts)), w2_(std::move(w2)) {
    tau_ = static_cast<double>(parts_.size());
    std::vector<double> mass(parts_.size());
    frob2_ = 0.0;
    for (size_t t = 0; t < parts_.size(); ++t) {
      mass[t] = w2_[t] * parts_[t]->frob2();
      frob2_ += mass[t];
    }
    frob2_ *= tau_;
    pick_ = AliasTable(mass);
  }
  index_t rows() const override { return parts_.front()->rows(); }
  index_t cols() const override { return parts_.front()->cols(); }
  cplx query(index_t i, index_t j) const override {
    double s = 0.0;
    for (size_t t = 0; t < parts_.size(); ++t) s += w2_[t] * abs2(parts_[t]->query(i, j));
    return {std::sqrt(tau_ * s), 0.0};
  }
  double row_norm2(index_t i) const override {
    double s = 0.0;
    for (size_t t = 0; t < parts_.size(); ++t) s += w2_[t] * parts_[t]->row_norm2(i);
    return tau_ * s;
  }
  double frob2() const override { return frob2_; }
  index_t sample_row(Rng& rng) const override { return parts_[pick_.sample(rng)]->sample_row(rng); }
  index_t sample_in_row(index_t i, Rng& rng) const override {
    double total = 0.0;
    for (size_t t = 0; t < parts_.size(); ++t) total += w2_[t] * parts_[t]->row_norm2(i);
    double u = uniform01(rng) * total;
    size_t pick = parts_.size() - 1;
    for (size_t t = 0; t < parts_.size(); ++t) {
      const double m = w2_[t] * parts_[t]->row_norm2(i);
      if (m > 0.0) pick = t;
      if (u < m) break;
      u -= m;
    }
    return parts_[pick]->sample_in_row(i, rng);
  }

 private:
  std::vector<std::shared_ptr<const MatrixSampler>> parts_;
  std::vector<double> w2_;
  double tau_ = 1.0;
  double frob2_ = 0.0;
  AliasTable pick_;
};

}  // namespace

OversampledVector linear_combination(const std::vector<OversampledVector>& vs,
                                     const std::vector<cplx>& lambdas, bool compute_norm) {
  require(!vs.empty(), "linear_combination: need at least one vector");
  require(vs.size() == lambdas.size(), "linear_combination: coefficient count mismatch");
  const index_t n = vs.front().size();
  std::vector<std::shared_ptr<const VectorSampler>> parts;
  std::vector<double> w2;
  std::vector<EntryFn> entries;
  for (size_t t = 0; t < vs.size(); ++t) {
    require(vs[t].size() == n, "linear_combination: length mismatch");
    parts.push_back(vs[t].bound);
    w2.push_back(abs2(lambdas[t]));
    entries.push_back(vs[t].entry);
  }
  OversampledVector out;
  out.bound = std::make_shared<LinCombBound>(std::move(parts), std::move(w2));
  out.entry = [entries = std::move(entries), lambdas](index_t i) {
    cplx s = 0.0;
    for (size_t t = 0; t < entries.size(); ++t) s += lambdas[t] * entries[t](i);
    return s;
  };
  if (compute_norm) {
    double s = 0.0;
    for (index_t i = 0; i < n; ++i) s += abs2(out.entry(i));
    out.norm2 = s;
  }
  return out;
}

double linear_combination_phi(const std::vector<OversampledVector>& vs,
                              const std::vector<cplx>& lambdas, double out_norm2) {
  double s = 0.0;
  for (size_t t = 0; t < vs.size(); ++t) {
    require(vs[t].phi_known(), "linear_combination_phi: component norm unknown");
    s += vs[t].phi() * abs2(lambdas[t]) * (*vs[t].norm2);
  }
  if (out_norm2 <= 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(vs.size()) * s / out_norm2;
}

OversampledMatrix outer_product(const OversampledVector& u, const OversampledVector& v) {
  OversampledMatrix out;
  out.bound = std::make_shared<OuterBound>(u.bound, v.bound);
  out.entry = [ue = u.entry, ve = v.entry](index_t i, index_t j) { return ue(i) * std::conj(ve(j)); };
  if (u.norm2 && v.norm2) out.frob2 = (*u.norm2) * (*v.norm2);
  return out;
}

OversampledMatrix matrix_linear_combination(const std::vector<OversampledMatrix>& as,
                                            const std::vector<cplx>& lambdas, bool compute_norm) {
  require(!as.empty(), "matrix_linear_combination: need at least one matrix");
  require(as.size() == lambdas.size(), "matrix_linear_combination: coefficient count mismatch");
  const index_t m = as.front().rows(), n = as.front().cols();
  std::vector<std::shared_ptr<const MatrixSampler>> parts;
  std::vector<double> w2;
  std::vector<MatEntryFn> entries;
  for (size_t t = 0; t < as.size(); ++t) {
    require(as[t].rows() == m && as[t].cols() == n, "matrix_linear_combination: shape mismatch");
    parts.push_back(as[t].bound);
    w2.push_back(abs2(lambdas[t]));
    entries.push_back(as[t].entry);
  }
  OversampledMatrix out;
  out.bound = std::make_shared<MatLinCombBound>(std::move(parts), std::move(w2));
  out.entry = [entries = std::move(entries), lambdas](index_t i, index_t j) {
    cplx s = 0.0;
    for (size_t t = 0; t < entries.size(); ++t) s += lambdas[t] * entries[t](i, j);
    return s;
  };
  if (compute_norm) {
    double s = 0.0;
    for (index_t i = 0; i < m; ++i)
      for (index_t j = 0; j < n; ++j) s += abs2(out.entry(i, j));
    out.frob2 = s;
  }
  return out;
}

}  // namespace sqla
