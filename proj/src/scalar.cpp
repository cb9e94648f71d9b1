#include "sqla/scalar.hpp"

#include <algorithm>
#include <cmath>

namespace sqla {

cplx ScalarFunction::fbar(double x) const {
  if (fbar_exact) return fbar_exact(x);
  if (x == 0.0) {
    const double h = 1e-6;
    return (f(h) - f(-h)) / (2.0 * h);
  }
  return (f(x) - f(0.0)) / x;
}

namespace fn {

namespace {

void check_positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0.0, std::string(what) + " must be positive");
}

void check_eta(double eta) {
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0,1)");
}

}  // namespace

ScalarFunction identity() {
  ScalarFunction s;
  s.name = "identity";
  s.f = [](double x) { return cplx(x, 0.0); };
  s.fbar_exact = [](double) { return cplx(1.0, 0.0); };
  s.L = 1.0;
  s.Lbar = 0.0;
  return s;
}

ScalarFunction constant(cplx c) {
  ScalarFunction s;
  s.name = "constant";
  s.f = [c](double) { return c; };
  s.fbar_exact = [](double) { return cplx(0.0, 0.0); };
  s.constant = true;
  return s;
}

ScalarFunction ramp(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && hi > lo, ErrorKind::Validation,
          "ramp needs 0 < lo < hi");
  ScalarFunction s;
  s.name = "ramp";
  const double w = hi - lo;
  s.f = [lo, hi, w](double x) {
    if (x <= lo) return cplx(0.0, 0.0);
    if (x >= hi) return cplx(1.0, 0.0);
    return cplx((x - lo) / w, 0.0);
  };
  s.fbar_exact = [lo, hi, w](double x) {
    if (x <= lo) return cplx(0.0, 0.0);
    if (x >= hi) return cplx(1.0 / x, 0.0);
    return cplx((x - lo) / (w * x), 0.0);
  };
  s.L = 1.0 / w;
  s.Lbar = std::max(1.0 / (w * lo), 1.0 / (hi * hi));
  return s;
}

ScalarFunction step(double sigma, double eta) {
  check_positive(sigma, "sigma");
  check_eta(eta);
  const double s2 = sigma * sigma;
  ScalarFunction s = ramp((1 - eta) * (1 - eta) * s2, (1 + eta) * (1 + eta) * s2);
  s.name = "step";
  s.L = 1.0 / (4 * eta * s2);
  s.Lbar = 1.0 / (4 * eta * (1 - eta) * (1 - eta) * s2 * s2);
  return s;
}

ScalarFunction thresholded_inverse(double sigma, double eta) {
  check_positive(sigma, "sigma");
  check_eta(eta);
  const double s2 = sigma * sigma;
  const double a = s2 * (1 - eta);
  const double slope = 1.0 / (eta * s2 * s2);
  ScalarFunction s;
  s.name = "thresholded_inverse";
  s.f = [a, s2, slope](double x) {
    if (x < a) return cplx(0.0, 0.0);
    if (x < s2) return cplx((x - a) * slope, 0.0);
    return cplx(1.0 / x, 0.0);
  };
  s.fbar_exact = [a, s2, slope](double x) {
    if (x < a) return cplx(0.0, 0.0);
    if (x < s2) return cplx((x - a) * slope / x, 0.0);
    return cplx(1.0 / (x * x), 0.0);
  };
  s.L = slope;
  s.Lbar = 1.0 / (eta * eta * (1 - eta) * (1 - eta) * s2 * s2 * s2);
  return s;
}

ScalarFunction window(double center, double w) {
  check_positive(w, "window width");
  ScalarFunction s;
  s.name = "window";
  s.f = [center, w](double x) {
    const double t = std::abs(x - center);
    if (t < w / 8) return cplx(1.0, 0.0);
    if (t >= w / 4) return cplx(0.0, 0.0);
    return cplx(2.0 - 8.0 * t / w, 0.0);
  };
  s.L = 8.0 / w;
  const double a = center - w / 4;
  if (a > 0.0) {
    s.fbar_exact = [f = s.f](double x) { return x == 0.0 ? cplx(0.0, 0.0) : f(x) / x; };
    s.Lbar = s.L / a + 1.0 / (a * a);
  } else {
    ScalarFunction tmp = s;
    s.Lbar = measure_lipschitz(tmp, 0.0, center + w / 4, 20000).max_slope_bar;
  }
  return s;
}

namespace {

// sin(r)/r, smooth through r = 0
double sinc(double r) {
  if (std::abs(r) < 1e-4) return 1.0 - r * r / 6.0 + r * r * r * r / 120.0;
  return std::sin(r) / r;
}

}  // namespace

ScalarFunction cos_sqrt(double L, double Lbar) {
  ScalarFunction s;
  s.name = "cos_sqrt";
  s.f = [](double x) {
    if (x >= 0) return cplx(std::cos(std::sqrt(x)), 0.0);
    return cplx(std::cosh(std::sqrt(-x)), 0.0);
  };
  // (cos sqrt x - 1)/x = -2 sin^2(sqrt x / 2)/x = -(1/2) sinc(sqrt x / 2)^2
  s.fbar_exact = [](double x) {
    if (x >= 0) {
      const double v = sinc(std::sqrt(x) / 2.0);
      return cplx(-0.5 * v * v, 0.0);
    }
    if (x > -1e-8) return cplx(-0.5 + x / 24.0, 0.0);
    return cplx((std::cosh(std::sqrt(-x)) - 1.0) / x, 0.0);
  };
  s.L = L;
  s.Lbar = Lbar;
  return s;
}

ScalarFunction cos_sqrt() { return cos_sqrt(0.5, 1.0 / 24.0); }

ScalarFunction isinc_sqrt(double L, double Lbar) {
  ScalarFunction s;
  s.name = "isinc_sqrt";
  s.f = [](double x) {
    if (x >= 0) return cplx(0.0, sinc(std::sqrt(x)));
    const double r = std::sqrt(-x);
    return cplx(0.0, r < 1e-4 ? 1.0 + r * r / 6.0 : std::sinh(r) / r);
  };
  s.fbar_exact = [](double x) {
    if (std::abs(x) < 1e-3) return cplx(0.0, -1.0 / 6.0 + x / 120.0 - x * x / 5040.0);
    if (x >= 0) return cplx(0.0, (sinc(std::sqrt(x)) - 1.0) / x);
    const double r = std::sqrt(-x);
    return cplx(0.0, (std::sinh(r) / r - 1.0) / x);
  };
  s.L = L;
  s.Lbar = Lbar;
  return s;
}

ScalarFunction isinc_sqrt() { return isinc_sqrt(0.25, 1.0 / 60.0); }

ScalarFunction thresholded_sqrt(double sigma) {
  check_positive(sigma, "sigma");
  const double s2 = sigma * sigma;
  ScalarFunction s;
  s.name = "thresholded_sqrt";
  s.f = [sigma, s2](double x) {
    if (x < s2 / 2) return cplx(0.0, 0.0);
    if (x < s2) return cplx(2 * x / sigma - sigma, 0.0);
    return cplx(std::sqrt(x), 0.0);
  };
  s.fbar_exact = [sigma, s2](double x) {
    if (x < s2 / 2) return cplx(0.0, 0.0);
    if (x < s2) return cplx(2 / sigma - sigma / x, 0.0);
    return cplx(1.0 / std::sqrt(x), 0.0);
  };
  s.L = 2.0 / sigma;
  s.Lbar = 4.0 / (sigma * s2);
  return s;
}

ScalarFunction thresholded_recip(double sigma) {
  check_positive(sigma, "sigma");
  const double s2 = sigma * sigma;
  const double s4 = s2 * s2;
  ScalarFunction s;
  s.name = "thresholded_recip";
  s.f = [s2, s4](double x) {
    if (x < s2 / 2) return cplx(0.0, 0.0);
    if (x < s2) return cplx(2 * x / s4 - 1 / s2, 0.0);
    return cplx(1.0 / x, 0.0);
  };
  s.fbar_exact = [s2, s4](double x) {
    if (x < s2 / 2) return cplx(0.0, 0.0);
    if (x < s2) return cplx(2 / s4 - 1 / (s2 * x), 0.0);
    return cplx(1.0 / (x * x), 0.0);
  };
  s.L = 2.0 / s4;
  s.Lbar = 4.0 / (s4 * s2);
  return s;
}

ScalarFunction shifted_inverse(double s2) {
  check_positive(s2, "shift");
  ScalarFunction s;
  s.name = "shifted_inverse";
  s.f = [s2](double x) { return cplx(1.0 / (x + s2), 0.0); };
  s.fbar_exact = [s2](double x) { return cplx(-1.0 / (s2 * (x + s2)), 0.0); };
  s.L = 1.0 / (s2 * s2);
  s.Lbar = 1.0 / (s2 * s2 * s2);
  return s;
}

ScalarFunction exp_neg(double scale, double radius) {
  require(scale >= 0 && radius >= 0, "exp_neg needs nonnegative scale and radius");
  ScalarFunction s;
  s.name = "exp_neg";
  s.f = [scale](double x) { return cplx(std::exp(-scale * x), 0.0); };
  s.fbar_exact = [scale](double x) {
    if (x == 0.0) return cplx(-scale, 0.0);
    return cplx(std::expm1(-scale * x) / x, 0.0);
  };
  s.L = scale * std::exp(scale * radius);
  s.Lbar = 0.5 * scale * scale * std::exp(scale * radius);
  s.constant = scale == 0.0;
  return s;
}

ScalarFunction polynomial(std::vector<double> coeffs) {
  require(!coeffs.empty(), "polynomial needs coefficients");
  ScalarFunction s;
  s.name = "polynomial";
  auto eval = [](const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
    return acc;
  };
  s.f = [coeffs, eval](double x) { return cplx(eval(coeffs, x), 0.0); };
  std::vector<double> shifted(coeffs.begin() + 1, coeffs.end());
  if (shifted.empty()) shifted.push_back(0.0);
  s.fbar_exact = [shifted, eval](double x) { return cplx(eval(shifted, x), 0.0); };
  // Lipschitz on [-1, 1]
  for (std::size_t k = 1; k < coeffs.size(); ++k) s.L += k * std::abs(coeffs[k]);
  for (std::size_t k = 1; k < shifted.size(); ++k) s.Lbar += k * std::abs(shifted[k]);
  bool all_zero = true;
  for (std::size_t k = 1; k < coeffs.size(); ++k) all_zero = all_zero && coeffs[k] == 0.0;
  s.constant = all_zero;
  return s;
}

ScalarFunction clamp(const ScalarFunction& f, double lo, double hi) {
  require(lo < hi, "clamp needs lo < hi");
  ScalarFunction s = f;
  s.name = f.name + "_clamped";
  auto inner = f.f;
  s.f = [inner, lo, hi](double x) { return inner(std::clamp(x, lo, hi)); };
  const cplx g0 = s.f(0.0);
  auto fb = f;
  if (lo <= 0.0 && hi >= 0.0) {
    s.fbar_exact = [fb, inner, lo, hi, g0](double x) {
      if (x >= lo && x <= hi) return fb.fbar(x);
      return (inner(std::clamp(x, lo, hi)) - g0) / x;
    };
  } else {
    s.fbar_exact = nullptr;
  }
  return s;
}

ScalarFunction odd_to_even(const ScalarFunction& f, double L, double Lbar) {
  ScalarFunction s;
  s.name = f.name + "_even";
  auto inner = f.f;
  s.f = [inner](double x) {
    if (x <= 0.0) {
      const double h = 1e-6;
      return (inner(h) - inner(-h)) / (2.0 * h);
    }
    const double r = std::sqrt(x);
    return inner(r) / r;
  };
  s.L = L;
  s.Lbar = Lbar;
  return s;
}

}  // namespace fn

LipschitzCheck measure_lipschitz(const ScalarFunction& f, double lo, double hi, int points) {
  require(hi > lo && points >= 2, "bad Lipschitz grid");
  LipschitzCheck out;
  const double h = (hi - lo) / (points - 1);
  cplx pf = f(lo), pb = f.fbar(lo);
  for (int k = 1; k < points; ++k) {
    const double x = lo + k * h;
    const cplx cf = f(x), cb = f.fbar(x);
    out.max_slope = std::max(out.max_slope, std::abs(cf - pf) / h);
    out.max_slope_bar = std::max(out.max_slope_bar, std::abs(cb - pb) / h);
    pf = cf;
    pb = cb;
  }
  return out;
}

}  // namespace sqla
