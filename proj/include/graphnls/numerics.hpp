#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace graphnls {

namespace detail {

template <class F>
double simpson_split(F& f, double a, double m, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = (left + right - whole) / 15.0;
  if (depth <= 0 || std::abs(err) <= tol) return left + right + err;
  return simpson_split(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_split(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature with Richardson error control; intervals keep
/// halving where the estimate misses `tol`, so endpoint derivative
/// singularities get resolved by local refinement.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-13, int max_depth = 48) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_split(f, a, m, b, fa, fm, fb, whole, tol, max_depth);
}

/// Bisection on a bracketing interval [lo, hi] with f(lo) and f(hi) of
/// opposite sign; returns the midpoint of the final interval of width xtol.
template <class F>
double bisect(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::runtime_error("bisect: endpoints do not bracket a sign change");
  for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Cubic spline on a uniform grid x_i = x0 + i*h with not-a-knot end
/// conditions (third derivative continuous across the first and last
/// interior knots), exact for cubics.
template <class T>
class CubicSpline {
 public:
  CubicSpline(double x0, double h, std::vector<T> y) : x0_(x0), h_(h), y_(std::move(y)) {
    const int n = static_cast<int>(y_.size());
    if (n < 4) throw std::invalid_argument("CubicSpline: need at least 4 samples");
    if (!(h > 0.0)) throw std::invalid_argument("CubicSpline: spacing must be positive");
    m_.assign(n, T{});
    // Tridiagonal system for interior second derivatives m_1..m_{n-2}; the
    // not-a-knot rows reduce to 6*m_1 = D_1 and 6*m_{n-2} = D_{n-2}.
    std::vector<double> diag(n, 4.0), sub(n, 1.0), sup(n, 1.0);
    std::vector<T> rhs(n, T{});
    const double inv_h2 = 1.0 / (h * h);
    for (int i = 1; i <= n - 2; ++i) rhs[i] = 6.0 * inv_h2 * (y_[i - 1] - 2.0 * y_[i] + y_[i + 1]);
    diag[1] = 6.0;
    sup[1] = 0.0;
    diag[n - 2] = 6.0;
    sub[n - 2] = 0.0;
    // Thomas elimination over rows 1..n-2.
    for (int i = 2; i <= n - 2; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] = rhs[i] - w * rhs[i - 1];
    }
    m_[n - 2] = rhs[n - 2] * (1.0 / diag[n - 2]);
    for (int i = n - 3; i >= 1; --i) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) * (1.0 / diag[i]);
    m_[0] = 2.0 * m_[1] - m_[2];
    m_[n - 1] = 2.0 * m_[n - 2] - m_[n - 3];
  }

  double x_min() const { return x0_; }
  double x_max() const { return x0_ + h_ * (y_.size() - 1); }

  T eval(double x) const {
    const int n = static_cast<int>(y_.size());
    double s = (x - x0_) / h_;
    int i = static_cast<int>(std::floor(s));
    i = std::max(0, std::min(i, n - 2));
    const double B = s - i, A = 1.0 - B;
    const double w = h_ * h_ / 6.0;
    return A * y_[i] + B * y_[i + 1] + w * ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]);
  }

 private:
  double x0_, h_;
  std::vector<T> y_;
  std::vector<T> m_;  // second derivatives at the knots
};

}  // namespace graphnls
