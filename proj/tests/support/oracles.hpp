#pragma once

// Independent reference implementations used only by tests: quadrature,
// gamma CDF, brute-force pooling, and basic sample statistics. Nothing
// here may call into the code paths under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Eigen::ArrayXd;
using Eigen::ArrayXXd;
using Eigen::Index;

inline double mean(const ArrayXd& v) { return v.mean(); }

inline double variance(const ArrayXd& v) {
  const double m = v.mean();
  return (v - m).square().sum() / static_cast<double>(v.size());
}

// Standard error of the sample mean.
inline double se_mean(const ArrayXd& v) {
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

// Standard error of the sample variance via the fourth central moment.
inline double se_variance(const ArrayXd& v) {
  const double m = v.mean();
  const double m2 = (v - m).square().mean();
  const double m4 = (v - m).square().square().mean();
  return std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(v.size()));
}

// Adaptive Simpson on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 40) {
  struct Impl {
    const std::function<double(double)>& f;
    double run(double a, double b, double fa, double fm, double fb, double whole,
               double tol, int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm);
      const double frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
      }
      return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Impl{f}.run(a, b, fa, fm, fb, whole, tol, depth);
}

// Integral over (0, inf) via the substitution z = t / (1 - t).
inline double integrate_halfline(const std::function<double(double)>& f, double tol) {
  const auto g = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double z = t / (1.0 - t);
    return f(z) / ((1.0 - t) * (1.0 - t));
  };
  return adaptive_simpson(g, 0.0, 1.0, tol);
}

// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
// Lentz continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(log_prefactor);
  }
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(log_prefactor) * h;
}

// CDF of Gamma(shape, rate).
inline double gamma_cdf(double x, double shape, double rate) {
  return x <= 0.0 ? 0.0 : gamma_p(shape, rate * x);
}

// Two-sided Kolmogorov-Smirnov statistic against a CDF.
inline double ks_statistic(ArrayXd draws, const std::function<double(double)>& cdf) {
  std::vector<double> sorted(draws.data(), draws.data() + draws.size());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - f));
    d = std::max(d, std::abs(static_cast<double>(i) / n - f));
  }
  return d;
}

// Symmetric (edge-repeating) reflection, written independently of the
// library's padding helpers.
inline Index reflect(Index i, Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

// Direct per-pixel windowed log-moment with reflect padding; the slow
// reference for the integral-image path. Even kernels anchor the window
// top-left at (r - k/2, c - k/2).
inline ArrayXXd brute_force_pooled_moment(const ArrayXXd& raster, Index order_m,
                                          Index kernel) {
  const Index h = raster.rows();
  const Index w = raster.cols();
  ArrayXXd out(h, w);
  const Index lo = -(kernel / 2);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      double sum = 0.0;
      for (Index dr = lo; dr < lo + kernel; ++dr) {
        for (Index dc = lo; dc < lo + kernel; ++dc) {
          const double v = raster(reflect(r + dr, h), reflect(c + dc, w));
          sum += std::pow(std::log(v), static_cast<double>(order_m));
        }
      }
      out(r, c) = sum / static_cast<double>(kernel * kernel);
    }
  }
  return out;
}

// Euler-Mascheroni via Euler-Maclaurin-corrected harmonic sums.
inline double euler_gamma() {
  const int n = 1000000;
  double harmonic = 0.0;
  for (int k = n; k >= 1; --k) harmonic += 1.0 / static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return harmonic - std::log(nd) - 0.5 / nd + 1.0 / (12.0 * nd * nd);
}

}  // namespace oracle
