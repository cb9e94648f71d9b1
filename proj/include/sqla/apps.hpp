#pragma once

#include "sqla/svt.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sqla::apps {

// what a pipeline promised and with which randomness and sizes
struct Guarantee {
  std::string pipeline;
  double eps = 0.0;
  double delta = 0.0;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, index_t> sizes;
  // the error bound the pipeline claims, in the units of the problem
  double bound = 0.0;
  std::string bound_kind;
};

std::string describe(const Guarantee& g);

struct ThresholdSpec {
  double sigma = 1.0;
  double eta = 0.5;
};

void validate(const ThresholdSpec& s);

// ---------------------------------------------------------------------------
// recommendation

struct RecommendOptions {
  SvtOptions svt;
  // inner sketch of row i; 0 = K/eps^2 log(1/delta) times the constant
  index_t row_samples = 0;
  double row_constant = 1.0;
  // rejection rounds for the final sample; 0 = until the delta budget
  index_t max_rounds = 0;
};

struct RecommendResult {
  bool empty = false;
  std::optional<index_t> sample;
  // x with Ahat(i,.) = x R
  Vec x;
  std::optional<OversampledVector> row;
  RurDecomposition rur;
  RowSketch row_sketch;
  index_t rounds = 0;
  Guarantee guarantee;
};

RecommendResult recommend(std::shared_ptr<const SqMatrix> a, index_t i, const ThresholdSpec& spec, double eps,
                          double delta, const RecommendOptions& opt, Rng& rng);

// ---------------------------------------------------------------------------
// supervised clustering

// rows p/||p||, -q_i/(||q_i|| sqrt(n-1)) and weights ||p||, ||q_i||/sqrt(n-1)
struct CentroidInstance {
  Mat M;
  Vec w;
};
CentroidInstance centroid_instance(const Vec& p, const std::vector<Vec>& qs);

struct CentroidResult {
  double estimate = 0.0;
  index_t samples = 0;
  Guarantee guarantee;
};

// ||wM||^2 to additive eps
CentroidResult centroid_distance(std::shared_ptr<const SqMatrix> m, const Vec& w, double eps, double delta, Rng& rng);

// ---------------------------------------------------------------------------
// principal component analysis

struct PcaOptions {
  SvtOptions svt;  // r, c override the size formulas
  double spectral_norm = 0.0;
  double lambda_k = 0.0;  // estimated when 0
};

struct PcaResult {
  RVec lambda;
  std::vector<OversampledVector> vectors;
  // vhat_i = R^dagger coeffs.col(i)
  Mat coeffs;
  RurDecomposition base;
  Guarantee guarantee;
};

PcaResult pca(std::shared_ptr<const SqMatrix> x, index_t k, double eta_gap, double eps, double delta,
              const PcaOptions& opt, Rng& rng);

// ---------------------------------------------------------------------------
// thresholded pseudoinverse regression

struct RegressionOptions {
  SvtOptions svt;
  double spectral_norm = 0.0;
  // entry pool for u ~ R A^dagger b; 0 = from the per-entry tolerance
  index_t pool_per_mean = 0;
  index_t pool_groups = 0;
  double pool_constant = 1.0;
};

struct RegressionResult {
  bool empty = false;
  // true when ||xhat|| is too small for the relative bound to mean anything
  bool worst_case = false;
  std::optional<OversampledVector> x;
  Vec u;       // ~ R A^dagger b
  Vec coeffs;  // iotabar(CC^dagger) u
  RurDecomposition rur;
  double xhat_norm_proxy = 0.0;
  Guarantee guarantee;
};

// x* = A^+_{sigma,eta} b
RegressionResult solve_regularized(const OversampledMatrix& a, const OversampledVector& b, const ThresholdSpec& spec,
                                   double eps, double delta, const RegressionOptions& opt, Rng& rng);

// ---------------------------------------------------------------------------
// support vector machines

struct SvmOptions {
  RegressionOptions solve;
  // kernel queries are answered to kernel_eps ||x_i|| ||x_j||; 0 = eps
  double kernel_eps = 0.0;
  // dense check of ||Fhat|| <= 1 when m is at most this
  index_t dense_check_limit = 500;
};

struct SvmResult {
  RegressionResult solve;
  OversampledMatrix M;  // (L + [0 0; 0 K]) / Tr(F) with estimated K
  double trace_f = 0.0;
  double kernel_eps = 0.0;
  Guarantee guarantee;
};

// x = Fhat^+_{lambda,eta} [0; y]
SvmResult svm_train(std::shared_ptr<const SqMatrix> x, const Vec& y, double gamma, double lambda, double eta, double eps,
                    double delta, const SvmOptions& opt, Rng& rng);

// dense Fhat = F / Tr(F) for checking
Mat svm_dense_fhat(const Mat& x, double gamma);

struct SvmAltOptions {
  SvtOptions svt;
  double spectral_norm = 0.0;
  double eps_rows = 0.0;  // error of R 1 and R y; 0 = eps sqrt(m) sigma
};

struct SvmAltResult {
  double b = 0.0;
  OversampledVector alpha;
  Vec coeffs;  // Z (r_y - b r_1)
  RurDecomposition rur;
  Guarantee guarantee;
};

// xt is X^T (features by points); M = X X^T + I/gamma inverted through f(x) = 1/(x + 1/gamma)
SvmAltResult svm_train_alt(std::shared_ptr<const SqMatrix> xt, const Vec& y, double gamma, double eps, double delta,
                           const SvmAltOptions& opt, Rng& rng);

// ---------------------------------------------------------------------------
// Hamiltonian simulation

enum class HamiltonianMode { LowRank, General };

struct HamiltonianOptions {
  HamiltonianMode mode = HamiltonianMode::General;
  double sigma = 0.0;  // minimum singular value, low-rank mode
  SvtOptions cos_svt;
  SvtOptions sinc_svt;
  double spectral_norm = 0.0;  // t = ||H||
  // sample counts of the four products; 0 = formula
  index_t w_samples = 0;  // R_sinc H ~ W C
  index_t h_samples = 0;  // H b ~ R^dagger w
  double sample_constant = 1.0;
};

struct HamiltonianResult {
  OversampledVector b_hat;
  bool trivial = false;  // H == 0
  RurDecomposition cos_rur;
  RurDecomposition sinc_rur;
  Guarantee guarantee;
};

HamiltonianResult hamiltonian_evolve(const OversampledMatrix& h, const OversampledVector& b, double eps, double delta,
                                     const HamiltonianOptions& opt, Rng& rng);

// ---------------------------------------------------------------------------
// SDP feasibility via matrix multiplicative weights

struct SdpInstance {
  std::vector<OversampledMatrix> constraints;
  std::vector<double> b;
  double eps = 0.1;

  index_t dim() const { return constraints.empty() ? 0 : constraints[0].rows(); }
};

// spot-checks shapes and Hermiticity; with dense_norm_check also ||A^(i)|| <= 1
void validate(const SdpInstance& inst, Rng& rng, bool dense_norm_check = true);

struct TraceOptions {
  // skip the literal dense-branch test
  bool force_sketched = false;
  EigenOptions eigen;
  double eigen_eps_factor = 1.0;  // eps of the eigenvalue transformation is this times theta
  double trace_constant = 1.0;
};

struct TraceEstimates {
  std::vector<double> values;
  bool dense_branch = false;
  bool early_out = false;
  double partition = 0.0;
  std::optional<EigenDecompApprox> eig;
};

// Tr(A^(i) e^H)/Tr(e^H) for H = -theta sum_t A^(j_t)
TraceEstimates gibbs_trace_estimates(const std::vector<OversampledMatrix>& constraints, double theta,
                                     const std::vector<index_t>& js, double delta, const TraceOptions& opt, Rng& rng);

// (F/theta) ln n > sqrt(n)/18 with F = max ||A^(i)||_F
bool sdp_dense_branch(const std::vector<OversampledMatrix>& constraints, double theta);

struct GibbsStateDescription {
  double theta = 0.0;
  std::vector<index_t> js;
  std::optional<EigenDecompApprox> eig;
};

struct SdpResult {
  bool feasible = false;
  index_t iterations = 0;
  index_t budget = 0;
  GibbsStateDescription gibbs;
  std::vector<double> last_estimates;
  Guarantee guarantee;
};

SdpResult sdp_feasibility(const SdpInstance& inst, double delta, const TraceOptions& opt, Rng& rng);

// exp(-theta sum A^(j)) / Tr from dense constraints
Mat gibbs_dense(const SdpInstance& inst, const GibbsStateDescription& g);

// ---------------------------------------------------------------------------
// discriminant analysis

struct DiscriminantOptions {
  SvtOptions b_svt;
  SvtOptions w_svt;
  double b_norm = 0.0;
  double w_norm = 0.0;
  index_t cprime = 0;  // joint sketch for R_B R_W^dagger; 0 = formula
  double cprime_constant = 1.0;
};

struct DiscriminantResult {
  bool empty = false;
  RVec D;
  std::vector<OversampledVector> U;
  // U(.,i) = R_B^dagger coeffs.col(i)
  Mat coeffs;
  RurDecomposition b_rur;
  RurDecomposition w_rur;
  double alpha_bound = 0.0;
  Guarantee guarantee;

  // dense n x p, for verification
  Mat dense_u() const;
};

DiscriminantResult discriminant_analysis(const OversampledMatrix& b, const OversampledMatrix& w, double sigma,
                                         double eps, double delta, const DiscriminantOptions& opt, Rng& rng);

// fsqrt(B^dagger B) finv(W^dagger W) fsqrt(B^dagger B)
Mat discriminant_dense_operator(const Mat& b, const Mat& w, double sigma);

}  // namespace sqla::apps
