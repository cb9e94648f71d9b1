#pragma once

#include "sqla/types.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace sqla {

using RealToComplex = std::function<cplx(double)>;

// f with f(0), the shifted quotient fbar(x) = (f(x) - f(0))/x and Lipschitz data
struct ScalarFunction {
  std::string name;
  RealToComplex f;
  // optional closed form of fbar valid at 0 as well
  RealToComplex fbar_exact;
  double L = 0.0;
  double Lbar = 0.0;
  // validity radius d around each sigma_i^2
  double d = std::numeric_limits<double>::infinity();

  cplx operator()(double x) const { return f(x); }
  cplx f0() const { return f(0.0); }
  cplx fbar(double x) const;
  cplx fbar0() const { return fbar(0.0); }
  // true when f(x) == f(0) for every x
  bool constant = false;
};

namespace fn {

ScalarFunction identity();
ScalarFunction constant(cplx c);
// zero below (1-eta)^2 s^2, one above (1+eta)^2 s^2, linear in between
ScalarFunction step(double sigma, double eta);
// thresholded inverse: zero below s^2 (1-eta), 1/x above s^2, linear in between
ScalarFunction thresholded_inverse(double sigma, double eta);
// 0 below lo, 1 above hi, linear in between
ScalarFunction ramp(double lo, double hi);
// one on |x - center| < w/8, zero on |x - center| >= w/4
ScalarFunction window(double center, double w);
ScalarFunction cos_sqrt(double L, double Lbar);
ScalarFunction cos_sqrt();
// i sinc(sqrt x)
ScalarFunction isinc_sqrt(double L, double Lbar);
ScalarFunction isinc_sqrt();
ScalarFunction thresholded_sqrt(double sigma);
ScalarFunction thresholded_recip(double sigma);
// 1/(x + s2), s2 > 0
ScalarFunction shifted_inverse(double s2);
// exp(-s x); L = s e^{s r} on [-r, inf)
ScalarFunction exp_neg(double scale, double radius);
// sum_k c_k x^k
ScalarFunction polynomial(std::vector<double> coeffs);
// g = f on [lo, hi], constant outside
ScalarFunction clamp(const ScalarFunction& f, double lo, double hi);
// f(sqrt x)/sqrt x from an odd-form f, used by generic SVT
ScalarFunction odd_to_even(const ScalarFunction& f, double L, double Lbar);

}  // namespace fn

struct LipschitzCheck {
  double max_slope = 0.0;
  double max_slope_bar = 0.0;
};

// finite-difference slopes of f and fbar on a grid of [lo, hi]
LipschitzCheck measure_lipschitz(const ScalarFunction& f, double lo, double hi, int points = 20000);

}  // namespace sqla
