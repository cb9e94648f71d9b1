#pragma once

#include "sqla/sampling.hpp"
#include "sqla/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace sqla {

enum class Mode { Static, Dynamic };

// SQ access to a vector: entry query, index sampling with prob |v(i)|^2/||v||^2, norm query.
class VectorSampler {
 public:
  virtual ~VectorSampler() = default;
  virtual index_t size() const = 0;
  virtual cplx query(index_t i) const = 0;
  virtual index_t sample(Rng& rng) const = 0;
  virtual double norm2() const = 0;

  double norm() const;
  double prob(index_t i) const { return abs2(query(i)) / norm2(); }
};

class SqVector final : public VectorSampler {
 public:
  explicit SqVector(const Vec& v, Mode mode = Mode::Static);

  index_t size() const override { return static_cast<index_t>(v_.size()); }
  cplx query(index_t i) const override { return v_[static_cast<Eigen::Index>(i)]; }
  index_t sample(Rng& rng) const override;
  double norm2() const override;

  // dynamic mode only
  void update_entry(index_t i, cplx val);

  Mode mode() const { return mode_; }
  const Vec& data() const { return v_; }
  // tree root vs recomputed leaf sum (dynamic); static returns the cached pair
  double root_weight() const;
  double leaf_weight_sum() const;

 private:
  Vec v_;
  Mode mode_;
  AliasTable alias_;
  SumTree tree_;
  double norm2_ = 0.0;
};

// SQ access to a matrix in the row-major sense of the library: rows, then entries within a row.
class MatrixSampler {
 public:
  virtual ~MatrixSampler() = default;
  virtual index_t rows() const = 0;
  virtual index_t cols() const = 0;
  virtual cplx query(index_t i, index_t j) const = 0;
  virtual double row_norm2(index_t i) const = 0;
  virtual double frob2() const = 0;
  virtual index_t sample_row(Rng& rng) const = 0;
  virtual index_t sample_in_row(index_t i, Rng& rng) const = 0;

  double row_prob(index_t i) const { return row_norm2(i) / frob2(); }
  double entry_prob(index_t i, index_t j) const { return abs2(query(i, j)) / frob2(); }
  std::pair<index_t, index_t> sample_entry(Rng& rng) const {
    index_t i = sample_row(rng);
    return {i, sample_in_row(i, rng)};
  }
};

using RowMajorMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class SqMatrix final : public MatrixSampler {
 public:
  explicit SqMatrix(const Mat& A, Mode mode = Mode::Static);

  index_t rows() const override { return static_cast<index_t>(a_.rows()); }
  index_t cols() const override { return static_cast<index_t>(a_.cols()); }
  cplx query(index_t i, index_t j) const override {
    return a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double row_norm2(index_t i) const override { return row_norm2_[i]; }
  double frob2() const override;
  index_t sample_row(Rng& rng) const override;
  index_t sample_in_row(index_t i, Rng& rng) const override;

  void update_entry(index_t i, index_t j, cplx val);

  Mode mode() const { return mode_; }
  const RowMajorMat& data() const { return a_; }
  Mat dense() const { return a_; }
  // SQ access to the vector of row norms
  RVec row_norms() const;

 private:
  RowMajorMat a_;
  Mode mode_;
  std::vector<double> row_norm2_;
  std::vector<AliasTable> row_alias_;
  std::vector<SumTree> row_tree_;
  AliasTable norm_alias_;
  SumTree norm_tree_;
  double frob2_ = 0.0;
};

// SQ access to row i of a matrix sampler
class RowView final : public VectorSampler {
 public:
  RowView(std::shared_ptr<const MatrixSampler> m, index_t i) : m_(std::move(m)), i_(i) {}
  index_t size() const override { return m_->cols(); }
  cplx query(index_t j) const override { return m_->query(i_, j); }
  index_t sample(Rng& rng) const override { return m_->sample_in_row(i_, rng); }
  double norm2() const override { return m_->row_norm2(i_); }

 private:
  std::shared_ptr<const MatrixSampler> m_;
  index_t i_;
};

using EntryFn = std::function<cplx(index_t)>;
using MatEntryFn = std::function<cplx(index_t, index_t)>;

// phi-oversampled access: queries to v and SQ access to an entrywise bound.
// phi is stored as the pair (||bound||^2, ||v||^2 if known).
struct OversampledVector {
  EntryFn entry;
  std::shared_ptr<const VectorSampler> bound;
  std::optional<double> norm2;

  index_t size() const { return bound->size(); }
  cplx query(index_t i) const { return entry(i); }
  double bound_norm2() const { return bound->norm2(); }
  bool phi_known() const { return norm2.has_value(); }
  // NaN when ||v|| unknown, +inf on exact cancellation
  double phi() const;
  Vec dense() const;
  OversampledVector conj() const;

  static OversampledVector exact(std::shared_ptr<const SqVector> v);
  static OversampledVector exact(const Vec& v) { return exact(std::make_shared<const SqVector>(v)); }
};

struct OversampledMatrix {
  MatEntryFn entry;
  std::shared_ptr<const MatrixSampler> bound;
  std::optional<double> frob2;

  index_t rows() const { return bound->rows(); }
  index_t cols() const { return bound->cols(); }
  cplx query(index_t i, index_t j) const { return entry(i, j); }
  double bound_frob2() const { return bound->frob2(); }
  bool phi_known() const { return frob2.has_value(); }
  double phi() const;
  Vec row(index_t i) const;
  Mat dense() const;

  static OversampledMatrix exact(std::shared_ptr<const SqMatrix> a);
  static OversampledMatrix exact(const Mat& a) { return exact(std::make_shared<const SqMatrix>(a)); }
};

// row i (or its conjugate, i.e. a column of A^dagger) as an oversampled vector
OversampledVector row_vector(const OversampledMatrix& a, index_t i, bool conjugate = false);

// spot-checks |bound| >= |entry| on `probes` random indices; throws InvariantViolation
OversampledVector bounded_access(EntryFn entry, std::shared_ptr<const VectorSampler> bound,
                                 std::optional<double> norm2, Rng& rng, index_t probes = 1000);
OversampledMatrix bounded_access(MatEntryFn entry, std::shared_ptr<const MatrixSampler> bound,
                                 std::optional<double> frob2, Rng& rng, index_t probes = 1000);

struct RejectionOutcome {
  std::optional<index_t> index;
  index_t rounds = 0;
};

// ceil(2 phi ln(1/delta))
index_t rejection_rounds(double phi, double delta);

RejectionOutcome rejection_sample(const OversampledVector& u, index_t max_rounds, Rng& rng);

// returns an estimate of ||v||^2 via z = ceil(8 phi ln(2/delta)/nu^2) rounds.
// phi_bound is needed when ||v|| is not known to the handle.
double estimate_norm(const OversampledVector& u, double nu, double delta, Rng& rng,
                     std::optional<double> phi_bound = std::nullopt);

// u = sum_t lambda_t v_t with bound sqrt(k sum_t |lambda_t vtilde_t(i)|^2).
// compute_norm sums ||u||^2 over all entries (O(kn)) so that phi becomes known.
OversampledVector linear_combination(const std::vector<OversampledVector>& vs,
                                     const std::vector<cplx>& lambdas, bool compute_norm = false);

// closed-form phi of a linear combination when every component norm is known
double linear_combination_phi(const std::vector<OversampledVector>& vs,
                              const std::vector<cplx>& lambdas, double out_norm2);

// A = u v^dagger, bound utilde vtilde^dagger, phi = phi_u phi_v
OversampledMatrix outer_product(const OversampledVector& u, const OversampledVector& v);

// A = sum_t lambda_t A_t, bound sqrt(tau sum_t |lambda_t Atilde_t(i,j)|^2)
OversampledMatrix matrix_linear_combination(const std::vector<OversampledMatrix>& as,
                                            const std::vector<cplx>& lambdas,
                                            bool compute_norm = false);

}  // namespace sqla
