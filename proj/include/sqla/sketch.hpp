#pragma once

#include "sqla/sq_access.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sqla {

// S with rows e_{i_k}^T / sqrt(s p(i_k))
struct RowSketch {
  index_t source = 0;
  std::vector<index_t> idx;
  std::vector<double> weight;
  std::vector<double> p;
  // second marginal for joint sketches; weight then uses (p+q)/2
  std::vector<double> q;
  double phi = 1.0;
  std::uint64_t seed = 0;

  index_t size() const { return idx.size(); }
  // S X for a dense X with `source` rows
  Mat apply(const Mat& x) const;
};

// a distribution over [0, n) with exact probabilities, used to draw sketches
struct RowDist {
  index_t n = 0;
  std::function<index_t(Rng&)> sample;
  std::function<double(index_t)> prob;
};

RowDist row_norm_dist(std::shared_ptr<const MatrixSampler> a);
RowSketch draw_row_sketch(const RowDist& d, index_t s, Rng& rng, double phi = 1.0);
// rows of A (bound rows for oversampled input)
RowSketch draw_row_sketch(const OversampledMatrix& a, index_t s, Rng& rng);
// r = (p+q)/2 for two row distributions on the same index set
RowSketch draw_joint_sketch(const RowDist& p, const RowDist& q, index_t s, Rng& rng, double phi = 1.0);

// SA with lazily queried rows and chained SQ access to (SA)^dagger
class SketchedMatrix {
 public:
  SketchedMatrix() = default;
  SketchedMatrix(OversampledMatrix a, RowSketch s);

  index_t rows() const { return s_.size(); }
  index_t cols() const { return a_.cols(); }
  const RowSketch& sketch() const { return s_; }
  const OversampledMatrix& source() const { return a_; }

  cplx R(index_t k, index_t j) const { return a_.query(s_.idx[k], j) * s_.weight[k]; }
  Vec row(index_t k) const;
  // r x n, costs r n queries
  Mat dense() const;
  // ||SA||_F^2 over the bound (known without touching A)
  double bound_frob2() const;

  // column j of the bound with probability ||[S Atilde](.,j)||^2 / ||S Atilde||_F^2
  index_t sample_column(Rng& rng) const;
  double column_prob(index_t j) const;
  RowDist column_dist() const;
  // T^dagger drawn from the column distribution; c samples
  RowSketch draw_column_sketch(index_t c, Rng& rng) const;
  // C = S A T, r x c
  Mat core(const RowSketch& t) const;
  // S A T X and (S A T)^dagger Y without forming S A T; repeated rows are evaluated once
  Mat core_times(const RowSketch& t, const Mat& x) const;
  Mat core_adjoint_times(const RowSketch& t, const Mat& y) const;
  // R b for a dense b (exact, r n queries)
  Vec times(const Vec& b) const;
  // R^dagger w for a dense w of length r
  Vec adjoint_times(const Vec& w) const;

 private:
  OversampledMatrix a_;
  RowSketch s_;
  std::shared_ptr<const AliasTable> chain_;
};

using RowFn = std::function<Vec(index_t)>;

// X^dagger S^dagger S Y given row accessors of X and Y
Mat sketched_product(const RowFn& x, const RowFn& y, const RowSketch& s);

struct MatmulResult {
  RowSketch sketch;
  Mat product;
  // ||Mtilde||_F^2 of the oversampled access to the product
  double bound_frob2 = 0.0;
};

MatmulResult approx_matmul_onesided(const OversampledMatrix& x, const Mat& y, index_t s, Rng& rng);
MatmulResult approx_matmul_joint(const OversampledMatrix& x, const OversampledMatrix& y, index_t s, Rng& rng);
// 8 phi1 phi2 ln(2/delta)/eps^2
index_t joint_matmul_size(double phi1, double phi2, double eps, double delta);

struct GramCertificate {
  RowSketch sketch;
  Mat gram;  // A^dagger S^dagger S A
  double bound = 0.0;
  double phi = 1.0;
  double constant = 1.0;
};

// bound = constant * sqrt(phi^2 log s log(1/delta)/s) ||A|| ||A||_F
GramCertificate approx_gram_spectral(const OversampledMatrix& a, index_t s, double delta, double spectral_norm,
                                     Rng& rng, double constant = 1.0);

RVec estimate_singular_values(const OversampledMatrix& a, index_t r, index_t c, Rng& rng);

struct InnerProductPlan {
  index_t per_mean = 0;  // x
  index_t groups = 0;    // y
};
InnerProductPlan inner_product_plan(double bound_norm2, double v_norm2, double eps, double delta);

// <u, v> = sum conj(u_i) v_i. v_norm2 is ||v||^2 or an upper bound on it.
cplx inner_product_estimate(const OversampledVector& u, const EntryFn& v, double v_norm2, double eps,
                            double delta, Rng& rng);
// Tr[A B^dagger]
cplx trace_product_estimate(const OversampledMatrix& a, const MatEntryFn& b, index_t b_rows, index_t b_cols,
                            double b_frob2, double eps, double delta, Rng& rng);
// x^dagger A y
cplx bilinear_form_estimate(const Vec& x, const OversampledMatrix& a, const Vec& y, double eps, double delta,
                            Rng& rng);

// pre-drawn entry samples of A reused for many bilinear forms x^dagger A y
class EntryPool {
 public:
  EntryPool(const OversampledMatrix& a, index_t per_mean, index_t groups, Rng& rng);
  index_t per_mean() const { return per_mean_; }
  index_t groups() const { return groups_; }
  cplx estimate(const Vec& x, const Vec& y) const;
  // M(a,b) ~ sum_kl X(a,k) A(k,l) Y(b,l), i.e. X A Y^T, median of group means per entry
  Mat estimate_block(const Mat& x_rows, const Mat& y_rows) const;
  // same, with X and Y given by column accessors so only sampled columns are touched
  using ColFn = std::function<Vec(index_t)>;
  Mat estimate_block(index_t x_count, const ColFn& x_col, index_t y_count, const ColFn& y_col) const;
  index_t distinct_columns() const;

 private:
  index_t per_mean_, groups_;
  std::vector<index_t> rows_, cols_;
  std::vector<cplx> vals_;
};

// R b from samples j ~ |btilde_j|^2 shared across all rows of R; the median is taken over group
// means as vectors (the group mean closest to most others), giving ||R b - u|| <= eps w.p. 1 - delta
Vec sketched_row_products(const SketchedMatrix& r, const OversampledVector& b, double eps, double delta, Rng& rng);

struct IsometryFactor {
  Mat factor;     // (C_k)^+ R, c x n
  Mat isometry;   // D_k^{-1} U_k^dagger R, k x n
  index_t rank = 0;
  double alpha_projective = 0.0;
  double alpha_isometry = 0.0;
  bool empty = false;
};

// keeps singular values of C at or above threshold, at most k of them (k=0 means no cap)
IsometryFactor projective_isometry_factor(const Mat& r, const Mat& c, double threshold, index_t k = 0);

// thin SVD of a small matrix with singular values sorted descending and ties kept in index order
struct SmallSvd {
  Mat u;
  RVec s;
  Mat v;
};
SmallSvd small_svd(const Mat& c);

void write_sketch(std::ostream& os, const RowSketch& s);
RowSketch read_sketch(std::istream& is);

}  // namespace sqla
