#pragma once

#include "field.hpp"
#include "numerics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace graphnls {

/// What to do when a grid under-resolves a requested profile.
enum class GridCheck { reject, warn, ignore };

/// Parameters of a standing wave on the star graph with a delta vertex
/// coupling of strength alpha.  k counts the edges carrying the shifted
/// bump branch; existence requires omega > alpha^2/(N-2k)^2 and 2k < N.
struct WaveParams {
  int n_edges = 2;  // N
  double alpha = 0.0;
  double omega = 1.0;
  double p = 3.0;
  int k = 0;

  double existence_floor() const {
    const double d = static_cast<double>(n_edges - 2 * k);
    return alpha * alpha / (d * d);
  }
  /// Bump shift: tanh^{-1}( alpha / ((2k-N) sqrt(omega)) ).
  double a_k() const { return std::atanh(alpha / ((2.0 * k - n_edges) * std::sqrt(omega))); }
  /// Vertex parameter for k = 0: xi = -alpha/(N sqrt(omega)), in (-1,1).
  double xi() const { return -alpha / (n_edges * std::sqrt(omega)); }
  double amplitude() const { return (p + 1.0) * omega / 2.0; }     // prefactor inside [...]^{1/(p-1)}
  double half_width_rate() const { return 0.5 * (p - 1.0) * std::sqrt(omega); }  // argument slope b

  void validate() const {
    if (n_edges < 2) throw std::invalid_argument("WaveParams: N >= 2 required");
    if (!(p > 1.0)) throw std::invalid_argument("WaveParams: p > 1 required");
    if (k < 0 || 2 * k >= n_edges)
      throw std::invalid_argument("WaveParams: k must satisfy 0 <= k <= floor((N-1)/2)");
    if (!(omega > existence_floor()))
      throw std::domain_error("WaveParams: existence requires omega > alpha^2/(N-2k)^2");
  }
};

/// [A sech^2(arg)]^{1/(p-1)}
inline double sech_bump(double A, double arg, double p) {
  const double s = 1.0 / std::cosh(arg);
  const double base = A * s * s;
  return base > 0.0 ? std::pow(base, 1.0 / (p - 1.0)) : 0.0;
}

namespace detail {

inline void require_resolution(double h, double width, double tail, double amp, GridCheck check,
                               const char* what) {
  if (check == GridCheck::ignore) return;
  std::string msg;
  if (h > 0.05 * width)
    msg = std::string(what) + ": grid too coarse, h > 0.05 * profile width";
  else if (tail > 1e-12 * amp)
    msg = std::string(what) + ": truncated edge too short, profile tail above 1e-12 at x = L";
  else
    return;
  if (check == GridCheck::reject) throw std::domain_error(msg);
  std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

}  // namespace detail

/// Sample the standing-wave profile on a grid.  Edges 0..k-1 carry the
/// "-a_k" branch of the bump, edges k..N-1 the "+a_k" branch; the shared
/// vertex value then satisfies continuity by construction.
inline GraphField build_profile_delta(const WaveParams& w, const StarGraphGrid& grid,
                                      GridCheck check = GridCheck::reject) {
  w.validate();
  if (grid.n_edges != w.n_edges)
    throw std::invalid_argument("build_profile_delta: grid edge count does not match N");
  const double A = w.amplitude(), b = w.half_width_rate(), a = w.a_k();
  const double amp = std::pow(A, 1.0 / (w.p - 1.0));
  detail::require_resolution(grid.h, 1.0 / b,
                             sech_bump(A, b * grid.length() - std::abs(a), w.p), amp, check,
                             "build_profile_delta");
  return GraphField::sample_edges(
      grid, [&](int j, double x) { return sech_bump(A, b * x + (j < w.k ? -a : a), w.p); });
}

/// Even profile on the whole line whose restriction to x >= 0 replicates the
/// k = 0 graph profile on every edge.
inline LineField build_half_soliton(double alpha, double omega, double p, int n_edges, int M,
                                    double L, GridCheck check = GridCheck::reject) {
  WaveParams w{n_edges, alpha, omega, p, 0};
  w.validate();
  const double A = w.amplitude(), b = w.half_width_rate();
  const double shift = std::atanh(alpha / (n_edges * std::sqrt(omega)));
  LineField u(M, L);
  detail::require_resolution(u.h, 1.0 / b, sech_bump(A, b * L - std::abs(shift), p),
                             std::pow(A, 1.0 / (p - 1.0)), check, "build_half_soliton");
  for (int i = 0; i < M; ++i) {
    const double v = sech_bump(A, b * u.x(i) - shift, p);
    u.right[i] = v;
    u.left[i] = v;
  }
  return u;
}

// ---------------------------------------------------------------------------
// delta' standing waves on the line
// ---------------------------------------------------------------------------

enum class DeltaPrimeBranch { odd, asymmetric, asymmetric_swapped };

struct T1T2Solution {
  double t1 = 0.0;
  double t2 = 0.0;
  double t2_gap = 0.0;  // 1 - t2 resolved in extended precision
  double residual_symmetry = 0.0;  // |g(t1) - g(t2)|, g(t) = t^{p-1} - t^{p+1}
  double residual_sum = 0.0;       // |1/t1 + 1/t2 - gamma sqrt(omega)|
};

/// Solve the pair 0 < t1 < t2 < 1 with g(t1) = g(t2) and 1/t1 + 1/t2 =
/// gamma*sqrt(omega), where g(t) = t^{p-1} - t^{p+1} is unimodal on (0,1)
/// with peak at t* = sqrt((p-1)/(p+1)).  The sum constraint eliminates t1,
/// leaving a scalar root-find; it is run in the gap variable u = 1 - t2
/// (log-spaced bisection plus a Newton polish) because t2 approaches 1 like
/// omega^{-(p-1)/2} and would otherwise be lost to cancellation.
inline T1T2Solution solve_t1_t2(double gamma, double omega, double p) {
  if (!(gamma > 0.0)) throw std::invalid_argument("solve_t1_t2: gamma > 0 required");
  if (!(p > 1.0)) throw std::invalid_argument("solve_t1_t2: p > 1 required");
  const long double c = static_cast<long double>(gamma) * sqrtl(static_cast<long double>(omega));
  const long double lp = static_cast<long double>(p);
  const long double tstar = sqrtl((lp - 1.0L) / (lp + 1.0L));
  if (!(c > 2.0L / tstar))
    throw std::domain_error(
        "solve_t1_t2: asymmetric branch requires omega > (4/gamma^2)(p+1)/(p-1)");

  auto g = [lp](long double t) { return powl(t, lp - 1.0L) * (1.0L - t * t); };
  auto t1_of = [c](long double u) { return (1.0L - u) / ((c - 1.0L) - c * u); };
  auto F = [&](long double u) {
    const long double t2 = 1.0L - u;
    return g(t1_of(u)) - powl(t2, lp - 1.0L) * u * (2.0L - u);
  };

  // Bracket in w = log(u): t2 -> 1 gives F > 0, t2 = t* gives F < 0.
  long double w_lo = logl(1e-60L), w_hi = logl(1.0L - tstar);
  long double F_hi = F(expl(w_hi));
  if (!(F_hi < 0.0L))
    throw std::domain_error("solve_t1_t2: degenerate system at the existence boundary");
  if (!(F(expl(w_lo)) > 0.0L)) throw std::runtime_error("solve_t1_t2: failed to bracket the root");
  for (int it = 0; it < 120; ++it) {
    const long double w_mid = 0.5L * (w_lo + w_hi);
    if (F(expl(w_mid)) > 0.0L)
      w_lo = w_mid;
    else
      w_hi = w_mid;
  }
  long double u = expl(0.5L * (w_lo + w_hi));

  // Newton polish on F(u).
  auto gp = [lp](long double t) {
    return (lp - 1.0L) * powl(t, lp - 2.0L) - (lp + 1.0L) * powl(t, lp);
  };
  for (int it = 0; it < 4; ++it) {
    const long double t1 = t1_of(u), t2 = 1.0L - u;
    const long double den = (c - 1.0L) - c * u;
    const long double dF = gp(t1) / (den * den) + gp(t2);
    const long double step = F(u) / dF;
    if (!std::isfinite(static_cast<double>(step))) break;
    const long double next = u - step;
    if (next > 0.0L && next < 1.0L - tstar) u = next;
  }

  T1T2Solution out;
  const long double t1 = t1_of(u), t2 = 1.0L - u;
  out.t1 = static_cast<double>(t1);
  out.t2 = static_cast<double>(t2);
  out.t2_gap = static_cast<double>(u);
  out.residual_symmetry = static_cast<double>(fabsl(g(t1) - g(t2)));
  out.residual_sum = static_cast<double>(fabsl(1.0L / t1 + 1.0L / t2 - c));
  return out;
}

/// Parameters of a delta'-interaction standing wave (strength gamma > 0).
struct DeltaPrimeParams {
  double gamma = 1.0;
  double omega = 1.0;
  double p = 6.0;
  DeltaPrimeBranch branch = DeltaPrimeBranch::odd;
  // derived shifts (resolve() fills them)
  double t1 = 0.0, t2 = 0.0;
  double y0 = 0.0, y1 = 0.0, y2 = 0.0;

  double odd_floor() const { return 4.0 / (gamma * gamma); }
  double asymmetric_floor() const { return odd_floor() * (p + 1.0) / (p - 1.0); }
  double amplitude() const { return (p + 1.0) * omega / 2.0; }
  double half_width_rate() const { return 0.5 * (p - 1.0) * std::sqrt(omega); }
};

inline DeltaPrimeParams resolve_delta_prime(double gamma, double omega, double p,
                                            DeltaPrimeBranch branch) {
  if (!(gamma > 0.0)) throw std::invalid_argument("delta': gamma > 0 required");
  if (!(p > 1.0)) throw std::invalid_argument("delta': p > 1 required");
  DeltaPrimeParams d;
  d.gamma = gamma;
  d.omega = omega;
  d.p = p;
  d.branch = branch;
  const double rw = std::sqrt(omega);
  if (branch == DeltaPrimeBranch::odd) {
    if (!(omega > d.odd_floor()))
      throw std::domain_error("delta' odd branch requires omega > 4/gamma^2");
    d.y0 = 2.0 / ((p - 1.0) * rw) * std::atanh(2.0 / (gamma * rw));
  } else {
    const T1T2Solution s = solve_t1_t2(gamma, omega, p);
    d.t1 = s.t1;
    d.t2 = s.t2;
    d.y1 = 2.0 / ((p - 1.0) * rw) * std::atanh(s.t1);
    d.y2 = 2.0 / ((p - 1.0) * rw) * std::atanh(s.t2);
  }
  return d;
}

/// Sample a delta' profile.  The odd branch is antisymmetric with a jump of
/// 2*phi(0+) at the origin; the asymmetric branch puts a positive bump
/// shifted by y1 on x > 0 and a negative one shifted by y2 on x < 0 (the
/// swapped branch exchanges the shifts).
inline LineField build_profile_delta_prime(const DeltaPrimeParams& d, int M, double L,
                                           GridCheck check = GridCheck::reject) {
  const double A = d.amplitude(), b = d.half_width_rate();
  LineField u(M, L);
  double y_pos = 0.0, y_neg = 0.0;
  switch (d.branch) {
    case DeltaPrimeBranch::odd: y_pos = y_neg = d.y0; break;
    case DeltaPrimeBranch::asymmetric: y_pos = d.y1; y_neg = d.y2; break;
    case DeltaPrimeBranch::asymmetric_swapped: y_pos = d.y2; y_neg = d.y1; break;
  }
  detail::require_resolution(u.h, 1.0 / b, sech_bump(A, b * (L + std::min(y_pos, y_neg)), d.p),
                             std::pow(A, 1.0 / (d.p - 1.0)), check, "build_profile_delta_prime");
  for (int i = 0; i < M; ++i) {
    const double x = u.x(i);
    u.right[i] = sech_bump(A, b * (x + y_pos), d.p);
    u.left[i] = -sech_bump(A, b * (x + y_neg), d.p);
  }
  return u;
}

// ---------------------------------------------------------------------------
// mass-preserving dilation V^lambda(x) = sqrt(lambda) V(lambda x)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<cplx> rescale_panel(const std::vector<cplx>& y, double h, double lambda) {
  const int M = static_cast<int>(y.size());
  CubicSpline<cplx> s(0.0, h, y);
  std::vector<cplx> out(M);
  const double root = std::sqrt(lambda);
  const double L = h * (M - 1);
  for (int i = 0; i < M; ++i) {
    const double xs = lambda * (h * i);
    out[i] = xs <= L ? root * s.eval(xs) : cplx{0.0, 0.0};  // beyond the data: decayed tail
  }
  return out;
}

}  // namespace detail

/// L^2-invariant scaling, resampled onto the same grid by cubic
/// interpolation; samples mapping beyond the truncated edge read the decayed
/// tail as zero.
inline GraphField scale_field(const GraphField& u, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("scale_field: lambda > 0 required");
  GraphField out(u.grid);
  out.vertex_coupled = u.vertex_coupled;
  for (int j = 0; j < u.grid.n_edges; ++j)
    out.edges[j] = detail::rescale_panel(u.edges[j], u.grid.h, lambda);
  if (out.vertex_coupled) out.set_vertex(out.edges[0][0]);
  return out;
}

inline LineField scale_field(const LineField& u, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("scale_field: lambda > 0 required");
  LineField out(u.n_points, u.length());
  out.left = detail::rescale_panel(u.left, u.h, lambda);
  out.right = detail::rescale_panel(u.right, u.h, lambda);
  return out;
}

/// Closed-form dilation of a graph standing wave: sqrt(lambda) Phi(lambda x)
/// sampled exactly, with no interpolation error.
inline GraphField scaled_profile_delta(const WaveParams& w, const StarGraphGrid& grid,
                                       double lambda, GridCheck check = GridCheck::reject) {
  if (!(lambda > 0.0)) throw std::invalid_argument("scaled_profile_delta: lambda > 0 required");
  w.validate();
  const double A = w.amplitude(), b = w.half_width_rate(), a = w.a_k();
  const double root = std::sqrt(lambda);
  detail::require_resolution(grid.h, 1.0 / (lambda * b),
                             sech_bump(A, lambda * b * grid.length() - std::abs(a), w.p),
                             std::pow(A, 1.0 / (w.p - 1.0)), check, "scaled_profile_delta");
  return GraphField::sample_edges(grid, [&](int j, double x) {
    return root * sech_bump(A, b * lambda * x + (j < w.k ? -a : a), w.p);
  });
}

/// Same closed-form dilation for a delta' profile.
inline LineField scaled_profile_delta_prime(const DeltaPrimeParams& d, int M, double L,
                                            double lambda, GridCheck check = GridCheck::reject) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("scaled_profile_delta_prime: lambda > 0 required");
  const double root = std::sqrt(lambda);
  const double A = d.amplitude(), b = d.half_width_rate();
  double y_pos = (d.branch == DeltaPrimeBranch::odd)                ? d.y0
                 : (d.branch == DeltaPrimeBranch::asymmetric)       ? d.y1
                                                                    : d.y2;
  double y_neg = (d.branch == DeltaPrimeBranch::odd)                ? d.y0
                 : (d.branch == DeltaPrimeBranch::asymmetric)       ? d.y2
                                                                    : d.y1;
  LineField u(M, L);
  detail::require_resolution(u.h, 1.0 / (lambda * b),
                             sech_bump(A, b * (lambda * L + std::min(y_pos, y_neg)), d.p),
                             std::pow(A, 1.0 / (d.p - 1.0)), check, "scaled_profile_delta_prime");
  for (int i = 0; i < M; ++i) {
    const double x = u.x(i);
    u.right[i] = root * sech_bump(A, b * (lambda * x + y_pos), d.p);
    u.left[i] = -root * sech_bump(A, b * (lambda * x + y_neg), d.p);
  }
  return u;
}

// ---------------------------------------------------------------------------
// discrete residuals of the stationary equation and vertex conditions
// ---------------------------------------------------------------------------

struct ProfileResiduals {
  double interior_sup = 0.0;     // sup | -u'' + omega u - |u|^{p-1} u |
  double vertex_mismatch = 0.0;  // continuity defect at the vertex
  double flux = 0.0;             // | sum_j u_j'(0) - alpha u(0) |  (one-sided derivatives)
};

namespace detail {

inline double interior_residual_panel(const std::vector<cplx>& u, double h, double omega,
                                      double p) {
  const int M = static_cast<int>(u.size());
  const double inv_h2 = 1.0 / (h * h);
  double sup = 0.0;
  for (int i = 1; i < M - 1; ++i) {
    const cplx lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
    const cplx r = -lap + omega * u[i] - std::pow(std::abs(u[i]), p - 1.0) * u[i];
    sup = std::max(sup, std::abs(r));
  }
  return sup;
}

inline cplx one_sided_derivative(const std::vector<cplx>& u, double h) {
  return (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
}

}  // namespace detail

inline ProfileResiduals profile_residuals_delta(const GraphField& u, double alpha, double omega,
                                                double p) {
  ProfileResiduals r;
  cplx flux{0.0, 0.0};
  for (int j = 0; j < u.grid.n_edges; ++j) {
    r.interior_sup =
        std::max(r.interior_sup, detail::interior_residual_panel(u.edges[j], u.grid.h, omega, p));
    flux += detail::one_sided_derivative(u.edges[j], u.grid.h);
  }
  r.vertex_mismatch = u.max_vertex_mismatch();
  r.flux = std::abs(flux - alpha * u.vertex());
  return r;
}

struct DeltaPrimeResiduals {
  double interior_sup = 0.0;
  double derivative_mismatch = 0.0;  // |u'(0+) - u'(0-)|
  double jump = 0.0;                 // |(u(0+) - u(0-)) + gamma u'(0)|
};

inline DeltaPrimeResiduals profile_residuals_delta_prime(const LineField& u, double gamma,
                                                         double omega, double p) {
  DeltaPrimeResiduals r;
  r.interior_sup = std::max(detail::interior_residual_panel(u.right, u.h, omega, p),
                            detail::interior_residual_panel(u.left, u.h, omega, p));
  const cplx d_plus = detail::one_sided_derivative(u.right, u.h);
  const cplx d_minus = -detail::one_sided_derivative(u.left, u.h);  // left stored against -x
  r.derivative_mismatch = std::abs(d_plus - d_minus);
  r.jump = std::abs(u.jump() + gamma * 0.5 * (d_plus + d_minus));
  return r;
}

}  // namespace graphnls
