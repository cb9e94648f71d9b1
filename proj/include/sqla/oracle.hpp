#pragma once

#include "sqla/scalar.hpp"
#include "sqla/sq_access.hpp"

#include <functional>
#include <vector>

namespace sqla::oracle {

using RealFn = std::function<cplx(double)>;

// sum_i f(sigma_i) u_i v_i^dagger over a full SVD; f(0) = 0 assumed
Mat dense_svt(const Mat& a, const RealFn& f);
// f(A^dagger A) via the eigendecomposition of A^dagger A
Mat dense_even_svt(const Mat& a, const RealFn& f);

struct HermitianEig {
  RVec values;   // ascending
  Mat vectors;
  double asymmetry = 0.0;  // ||H - H^dagger||_F / 2 before symmetrization
};
HermitianEig hermitian_eig(const Mat& h);

Mat dense_eigen_transform(const Mat& h, const RealFn& f);

// Pade(13) scaling and squaring, independent of eigendecompositions
Mat expm(const Mat& a);
// exp(scale H) b through the eigendecomposition of Hermitian H
Vec expm_apply(const Mat& h, const Vec& b, cplx scale);

enum class ThresholdKind { LowRank, PseudoInverse };
// LowRank: A t(A^dagger A), t the step with knees (1-eta)^2 s^2, (1+eta)^2 s^2.
// PseudoInverse: iota(A^dagger A) A^dagger with iota the thresholded inverse.
Mat dense_thresholded(const Mat& a, double sigma, double eta, ThresholdKind kind);

struct SdpProblem {
  std::vector<Mat> constraints;
  std::vector<double> b;
  double eps = 0.1;
};

struct MmwReference {
  bool feasible = false;
  index_t iterations = 0;  // iterations executed
  index_t budget = 0;      // T = ceil(16 ln n / eps^2)
  std::vector<index_t> violated;
  Mat x;
};

index_t mmw_iterations(index_t n, double eps);
Mat gibbs_state(const std::vector<Mat>& constraints, const std::vector<index_t>& js, double theta, index_t n);
// multiplicative weights with exact traces; a constraint counts as violated when Tr[A X] > b + 3 eps/4
MmwReference dense_mmw_reference(const SdpProblem& p);

// brute-force D_v over all entries of the handle
RVec exact_output_distribution(const OversampledVector& v);
double tv_distance(const RVec& p, const RVec& q);

}  // namespace sqla::oracle
