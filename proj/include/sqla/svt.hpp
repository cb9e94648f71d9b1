#pragma once

#include "sqla/scalar.hpp"
#include "sqla/sketch.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sqla {

enum class NormMode { Frobenius, Spectral };

std::string to_string(NormMode m);

struct SvtOptions {
  double eps = 0.1;
  double delta = 0.1;
  NormMode norm = NormMode::Spectral;
  // explicit sizes; 0 means use the size formula times the constants below
  index_t r = 0;
  index_t c = 0;
  double r_constant = 1.0;
  double c_constant = 1.0;
  index_t min_size = 8;
  index_t max_size = 1 << 14;
  // ||A|| if known, otherwise estimated from a small sketch
  double spectral_norm = 0.0;
  // refuse when the validity radius d is below eps_bar
  bool check_radius = true;
};

struct SvtSizes {
  index_t r = 0;
  index_t c = 0;
  double eps_bar = 0.0;
};

// r ~ phi^2 L^2 ||A||_*^2 ||A||_F^2 log(1/delta)/eps^2, c ~ phi^2 Lbar^2 ||A||^4 ||A||_*^2 ||A||_F^2 log(1/delta)/eps^2
SvtSizes even_svt_sizes(const ScalarFunction& f, double phi, double spectral_norm, double frob, const SvtOptions& opt);

// ||A|| ||A||_F sqrt(phi^2 log(1/delta)/min(r,c))
double svt_eps_bar(double spectral_norm, double frob, double phi, double delta, index_t r, index_t c);

// estimates from sketches of doubling size until two successive values agree within 25%
double estimate_spectral_norm(const OversampledMatrix& a, Rng& rng, index_t start = 16, index_t cap = 1024);

struct RurDiagnostics {
  double r_norm = 0.0;          // ||R||
  double fbar_norm = 0.0;       // ||fbar(CC^dagger)||
  double sqrt_norm = 0.0;       // ||R^dagger sqrt|fbar|(CC^dagger)||
  double eps_bar = 0.0;
  bool exact = false;           // computed from dense R rather than the C proxy
};

// R^dagger fbar(CC^dagger) R + f(0) I with fbar(CC^dagger) kept in factored form
struct RurDecomposition {
  SketchedMatrix R;
  RowSketch T;
  // S A T with repeated rows and columns merged under sqrt(count) weights; same
  // singular values as the full r x c core, whose factors are expanded into svd
  Mat C;
  SmallSvd svd;
  // fbar(d_i^2) - fbar(0) on the singular directions of C
  Vec fbar_shift;
  cplx fbar0 = 0.0;
  cplx f0 = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  NormMode norm = NormMode::Spectral;
  std::uint64_t seed = 0;
  std::string function;
  RurDiagnostics diagnostics;

  index_t r() const { return R.rows(); }
  index_t c() const { return T.size(); }
  index_t dim() const { return R.cols(); }
  // r x r middle matrix
  Mat U() const;
  Vec core_apply(const Vec& w) const;
  // coordinates of C^dagger w in the right singular basis, so ||C^dagger w|| = ||core_adjoint(w)||
  Vec core_adjoint(const Vec& w) const;
  // exact R^dagger U R b + f(0) b, r n queries
  Vec apply(const Vec& b) const;
  Mat dense_operator() const;
};

// builds a RUR decomposition from given sketches
RurDecomposition rur_from_sketches(const OversampledMatrix& a, RowSketch s, RowSketch t, const ScalarFunction& f);

RurDecomposition even_svt(const OversampledMatrix& a, const ScalarFunction& f, const SvtOptions& opt, Rng& rng);

// ||R||, ||fbar(CC^dagger)||, ||R^dagger sqrt|fbar|(CC^dagger)|| from dense R
RurDiagnostics rur_diagnostics_exact(const RurDecomposition& rur);

enum class ApplyMode { Exact, Sketched };

// exact: R^dagger U R b + f(0) b via all r n entries of R.
// sketched: R b estimated from samples of b, output handle R^dagger (U u) + f(0) b
OversampledVector rur_apply(const RurDecomposition& rur, const OversampledVector& b, ApplyMode mode, double eps_b,
                            double delta_b, Rng& rng);
Vec rur_apply_dense(const RurDecomposition& rur, const Vec& b);

// lambda_k conj(R(k,.)) combined, plus shift b when shift != 0
OversampledVector rur_output_handle(const RurDecomposition& rur, const Vec& coeffs, cplx shift,
                                    const OversampledVector* b);

// C' M R + g(0) A, C' = A T' a column subset
struct CurDecomposition {
  OversampledMatrix a;
  RowSketch cols;   // T' as a sketch over column indices
  Mat M;            // c' x r
  SketchedMatrix R;
  cplx g0 = 0.0;
  bool shift_term = false;
  RurDecomposition inner;

  Mat column_factor() const;  // m x c'
  Mat dense_operator() const;
  Vec apply(const Vec& x) const;
};

struct GenericSvtOptions {
  SvtOptions svt;
  // columns for A R^dagger ~ A T' (S A T')^dagger; 0 = same as svt.c
  index_t cprime = 0;
  // use only the column norms of R (one-sided) when A^dagger access is missing
  bool one_sided = false;
};

// f with f(0) = 0 given through g(x) = f(sqrt x)/sqrt x. at is SQ access to A^dagger (may be null
// only when one_sided is set)
CurDecomposition generic_svt(const OversampledMatrix& a, const OversampledMatrix* at, const ScalarFunction& g,
                             const GenericSvtOptions& opt, Rng& rng);

struct EigenOptions {
  SvtOptions svt;       // sizes for the smooth projector; eps is replaced by eps/(L ||A||)
  double L = 1.0;
  double d = std::numeric_limits<double>::infinity();
  double spectral_norm = 0.0;
  // entry pool for M ~ R A R^dagger; 0 = from eps^3/L^3 with the constant
  index_t pool_per_mean = 0;
  index_t pool_groups = 0;
  double pool_constant = 1.0;
  index_t hermitian_probes = 1000;
};

struct EigenDecompApprox {
  RowSketch S;
  SketchedMatrix R;
  Mat N;          // k x r
  RVec lambda;    // eigenvalue estimates, matched to D
  RVec D;         // f(lambda) - f(0), descending
  cplx f0 = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  double isometry_bound = 0.0;
  index_t pool_samples = 0;
  RurDecomposition projector;

  index_t rank() const { return static_cast<index_t>(D.size()); }
  // N R, k x n
  Mat isometry() const;
  double isometry_error() const;
  Mat dense_operator() const;
  // (NR)^dagger g(lambda) (NR) + g(0) I for another function of the same eigenvalues
  Mat dense_operator(const ScalarFunction& g) const;
};

EigenDecompApprox eigen_transform(const OversampledMatrix& a, const ScalarFunction& f, double eps, double delta,
                                  const EigenOptions& opt, Rng& rng);

// spot-checks A(i,j) == conj(A(j,i)) on random index pairs
void check_hermitian(const OversampledMatrix& a, index_t probes, Rng& rng, double tol = 1e-10);

enum class Parity { Even, Odd };

struct QsvtPolynomial {
  std::vector<double> coeffs;  // p(x) = sum_k coeffs[k] x^k
  Parity parity = Parity::Even;
  // p(x) = q(x^2) or x q(x^2)
  std::vector<double> q;

  index_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  double operator()(double x) const;
  double q_at(double x) const;

  static QsvtPolynomial from_coeffs(std::vector<double> coeffs, Parity parity);
  static QsvtPolynomial chebyshev(index_t d, double scale = 1.0);
};

struct EnvelopeBounds {
  double q_max = 0.0;
  double dq_max = 0.0;
  double qbar_max = 0.0;
  double dqbar_max = 0.0;
};

EnvelopeBounds poly_envelope_bounds(const QsvtPolynomial& p, index_t grid = 100000);

struct QsvtOptions {
  SvtOptions svt;
  // matmul sizes for A R^dagger and A b in the odd branch
  index_t cprime = 0;
  index_t sb = 0;
  double eps_b = 0.0;  // 0 = eps/d
};

struct QsvtResult {
  OversampledVector v;
  RurDecomposition rur;
  Parity parity = Parity::Even;
};

// at (SQ access to A^dagger) is needed for the odd branch
QsvtResult qsvt_apply(const OversampledMatrix& a, const OversampledMatrix* at, const OversampledVector& b,
                      const QsvtPolynomial& p, double eps, double delta, const QsvtOptions& opt, Rng& rng);

}  // namespace sqla
