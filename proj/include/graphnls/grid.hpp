#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace graphnls {

using cplx = std::complex<double>;

enum class QuadRule { trapezoid, simpson };

/// Uniform grid shared by every edge of a star graph: x_i = i*h for
/// i = 0..M-1.  All edges carry the same spacing and point count, so the
/// edge length is (M-1)*h exactly.
struct StarGraphGrid {
  int n_edges = 1;    // N
  int n_points = 3;   // M, samples per edge
  double h = 1.0;     // spacing

  StarGraphGrid() = default;
  StarGraphGrid(int N, double L, int M) : n_edges(N), n_points(M), h(L / (M - 1)) {
    if (N < 1) throw std::invalid_argument("StarGraphGrid: at least one edge required");
    if (M < 3) throw std::invalid_argument("StarGraphGrid: at least 3 points per edge required");
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("StarGraphGrid: edge length must be positive");
  }

  double length() const { return h * (n_points - 1); }
  double x(int i) const { return h * i; }
  bool operator==(const StarGraphGrid&) const = default;
};

namespace detail {

/// Composite quadrature of f(0..M-1) on a uniform grid of spacing h.
/// Simpson requires an odd point count.
template <class F>
double panel_integral(int M, double h, QuadRule rule, F&& f) {
  if (rule == QuadRule::simpson) {
    if (M % 2 == 0) throw std::invalid_argument("Simpson rule needs an odd number of points");
    double s = f(0) + f(M - 1);
    for (int i = 1; i < M - 1; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i);
    return s * h / 3.0;
  }
  double s = 0.5 * (f(0) + f(M - 1));
  for (int i = 1; i < M - 1; ++i) s += f(i);
  return s * h;
}

/// Second-order first derivative of a sampled sequence: central stencil in
/// the interior, one-sided three-point stencils at both ends.
template <class Vec>
void panel_derivative(const Vec& u, double h, Vec& out) {
  const int M = static_cast<int>(u.size());
  out.resize(u.size());
  const double inv2h = 1.0 / (2.0 * h);
  out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2h;
  for (int i = 1; i < M - 1; ++i) out[i] = (u[i + 1] - u[i - 1]) * inv2h;
  out[M - 1] = (3.0 * u[M - 1] - 4.0 * u[M - 2] + u[M - 3]) * inv2h;
}

}  // namespace detail

}  // namespace graphnls
