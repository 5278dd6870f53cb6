#pragma once

#include "field.hpp"
#include "numerics.hpp"
#include "profiles.hpp"

#include <cmath>
#include <stdexcept>

namespace graphnls {

// ---------------------------------------------------------------------------
// delta graph functionals
//
//   E       = 1/2 ||V'||^2 + (alpha/2)|v(0)|^2 - 1/(p+1) ||V||_{p+1}^{p+1}
//   S_omega = E + (omega/2) ||V||^2
//   I_omega = ||V'||^2 + omega ||V||^2 - ||V||_{p+1}^{p+1} + alpha |v(0)|^2
//   P       = ||V'||^2 + (alpha/2)|v(0)|^2 - (p-1)/(2(p+1)) ||V||_{p+1}^{p+1}
// ---------------------------------------------------------------------------

inline double energy_delta(const GraphField& u, double alpha, double p,
                           QuadRule rule = QuadRule::trapezoid) {
  const double grad2 = mass(derivative(u), rule);
  const double pp1 = lp_norm_pow(u, p + 1.0, rule);
  return 0.5 * grad2 + 0.5 * alpha * std::norm(u.vertex()) - pp1 / (p + 1.0);
}

inline double action_delta(const GraphField& u, double alpha, double omega, double p,
                           QuadRule rule = QuadRule::trapezoid) {
  return energy_delta(u, alpha, p, rule) + 0.5 * omega * mass(u, rule);
}

inline double nehari_delta(const GraphField& u, double alpha, double omega, double p,
                           QuadRule rule = QuadRule::trapezoid) {
  const double grad2 = mass(derivative(u), rule);
  return grad2 + omega * mass(u, rule) - lp_norm_pow(u, p + 1.0, rule) +
         alpha * std::norm(u.vertex());
}

inline double virial_p_delta(const GraphField& u, double alpha, double p,
                             QuadRule rule = QuadRule::trapezoid) {
  const double grad2 = mass(derivative(u), rule);
  return grad2 + 0.5 * alpha * std::norm(u.vertex()) -
         (p - 1.0) / (2.0 * (p + 1.0)) * lp_norm_pow(u, p + 1.0, rule);
}

/// All delta-graph functional values of one field in one sweep.
inline FunctionalReport functional_report_delta(const GraphField& u, double alpha, double omega,
                                                double p, QuadRule rule = QuadRule::trapezoid) {
  FunctionalReport r;
  const double grad2 = mass(derivative(u), rule);
  const double m = mass(u, rule);
  const double pp1 = lp_norm_pow(u, p + 1.0, rule);
  r.vertex_abs2 = std::norm(u.vertex());
  r.mass = m;
  r.energy = 0.5 * grad2 + 0.5 * alpha * r.vertex_abs2 - pp1 / (p + 1.0);
  r.action = r.energy + 0.5 * omega * m;
  r.nehari = grad2 + omega * m - pp1 + alpha * r.vertex_abs2;
  r.virial_p = grad2 + 0.5 * alpha * r.vertex_abs2 - (p - 1.0) / (2.0 * (p + 1.0)) * pp1;
  return r;
}

// ---------------------------------------------------------------------------
// delta' line functionals (coupling strength gamma > 0, jump q = v(0+)-v(0-))
//
//   E_gamma = 1/2 ||v'||^2 - 1/(2 gamma)|q|^2 - 1/(p+1) ||v||_{p+1}^{p+1}
//   S,I,P analogous, with the vertex term -|q|^2/(2 gamma) (resp. -|q|^2/gamma).
// ---------------------------------------------------------------------------

inline FunctionalReport delta_prime_functionals(const LineField& u, double gamma, double omega,
                                                double p, QuadRule rule = QuadRule::trapezoid) {
  if (!(gamma > 0.0)) throw std::invalid_argument("delta_prime_functionals: gamma > 0 required");
  FunctionalReport r;
  const double grad2 = mass(derivative(u), rule);
  const double m = mass(u, rule);
  const double pp1 = lp_norm_pow(u, p + 1.0, rule);
  r.vertex_abs2 = std::norm(u.jump());
  r.mass = m;
  r.energy = 0.5 * grad2 - r.vertex_abs2 / (2.0 * gamma) - pp1 / (p + 1.0);
  r.action = r.energy + 0.5 * omega * m;
  r.nehari = grad2 + omega * m - pp1 - r.vertex_abs2 / gamma;
  r.virial_p = grad2 - r.vertex_abs2 / (2.0 * gamma) - (p - 1.0) / (2.0 * (p + 1.0)) * pp1;
  return r;
}

// ---------------------------------------------------------------------------
// closed forms for the k = 0 ground profile
// ---------------------------------------------------------------------------

/// Integral of (1-s^2)^{2/(p-1)} over [xi, 1], resolved adaptively.
inline double profile_shape_integral(double p, double xi, double tol = 1e-13) {
  if (xi >= 1.0) return 0.0;
  const double e = 2.0 / (p - 1.0);
  return adaptive_simpson([e](double s) { return std::pow(1.0 - s * s, e); }, xi, 1.0, tol);
}

/// ||Phi_0^alpha||_{p+1}^{p+1} in closed form:
///   (2N/((p-1) sqrt(omega))) * ((p+1) omega/2)^{(p+1)/(p-1)} * int_xi^1 (1-s^2)^{2/(p-1)} ds,
/// valid for either sign of alpha with xi = -alpha/(N sqrt(omega)).
inline double profile_lp_norm_closed(const WaveParams& w) {
  if (w.k != 0) throw std::invalid_argument("profile_lp_norm_closed: k = 0 profiles only");
  w.validate();
  const double pref = 2.0 * w.n_edges / ((w.p - 1.0) * std::sqrt(w.omega));
  return pref * std::pow(w.amplitude(), (w.p + 1.0) / (w.p - 1.0)) *
         profile_shape_integral(w.p, w.xi());
}

/// |phi(0)|^2 = [((p+1) omega/2)(1 - xi^2)]^{2/(p-1)}.
inline double vertex_abs2_closed(const WaveParams& w) {
  const double xi = w.xi();
  return std::pow(w.amplitude() * (1.0 - xi * xi), 2.0 / (w.p - 1.0));
}

/// Ground-state action level d(omega) = S_omega(Phi_0^alpha)
///                                    = (p-1)/(2(p+1)) ||Phi_0^alpha||_{p+1}^{p+1}.
inline double dc_ground_level(const WaveParams& w) {
  return (w.p - 1.0) / (2.0 * (w.p + 1.0)) * profile_lp_norm_closed(w);
}

// ---------------------------------------------------------------------------
// second variation of the energy along the dilation family
// ---------------------------------------------------------------------------

/// f(xi) = ((p-5)/2) int_xi^1 (1-s^2)^{2/(p-1)} ds - xi (1-xi^2)^{2/(p-1)};
/// the sign of d^2/dlambda^2 E(Phi^lambda)|_{lambda=1} is -sign(f(xi)).
inline double threshold_f(double p, double xi, double tol = 1e-13) {
  return 0.5 * (p - 5.0) * profile_shape_integral(p, xi, tol) -
         xi * std::pow(1.0 - xi * xi, 2.0 / (p - 1.0));
}

struct SecondVariationReport {
  double value_sampled = 0.0;  // ||Phi'||^2 - (p-1)(p-3)/(4(p+1)) ||Phi||_{p+1}^{p+1}, quadrature
  double value_closed = 0.0;   // same quantity via the closed-form identities
  double f_xi = 0.0;           // sign test: value <= 0  <=>  f(xi) >= 0
  bool sign_consistent = false;
};

/// d^2/dlambda^2 E(Phi^lambda) at lambda = 1 for the k = 0 profile, evaluated
/// both from sampled norms and from the closed forms, with the f(xi) sign
/// test reconciled against them.
inline SecondVariationReport second_variation_energy(const WaveParams& w,
                                                     const StarGraphGrid& grid,
                                                     GridCheck check = GridCheck::reject) {
  if (w.k != 0) throw std::invalid_argument("second_variation_energy: k = 0 profiles only");
  const GraphField phi = build_profile_delta(w, grid, check);
  const double coeff = (w.p - 1.0) * (w.p - 3.0) / (4.0 * (w.p + 1.0));
  SecondVariationReport r;
  r.value_sampled = mass(derivative(phi)) - coeff * lp_norm_pow(phi, w.p + 1.0);
  // P(Phi) = 0 turns the gradient term into vertex + norm terms.
  const double pp1 = profile_lp_norm_closed(w);
  r.value_closed = -0.5 * w.alpha * vertex_abs2_closed(w) -
                   (w.p - 1.0) * (w.p - 5.0) / (4.0 * (w.p + 1.0)) * pp1;
  r.f_xi = threshold_f(w.p, w.xi());
  const double tol = 1e-9 * std::max(1.0, pp1);
  r.sign_consistent = (r.value_sampled <= tol && r.f_xi >= -1e-12) ||
                      (r.value_sampled >= -tol && r.f_xi <= 1e-12);
  return r;
}

// ---------------------------------------------------------------------------
// instability thresholds
// ---------------------------------------------------------------------------

struct ThresholdResult {
  double xi = 0.0;          // unique root of f in (0,1)
  double omega_star = 0.0;  // frequency threshold derived from xi
  double residual = 0.0;    // |f(xi)| at the returned root
  int sign_changes = 1;     // defensive scan count; 1 confirms uniqueness
};

/// Count sign changes of f on a uniform scan of (0,1).
inline int threshold_sign_scan(double p, int n = 1000) {
  int changes = 0;
  double prev = threshold_f(p, 1.0 / (n + 1.0), 1e-10);
  for (int i = 2; i <= n; ++i) {
    const double cur = threshold_f(p, i / (n + 1.0), 1e-10);
    if ((prev > 0.0) != (cur > 0.0)) ++changes;
    prev = cur;
  }
  return changes;
}

namespace detail {

inline ThresholdResult threshold_xi(double p) {
  if (!(p > 5.0))
    throw std::domain_error("instability_threshold: p > 5 required (no root of f in (0,1))");
  ThresholdResult r;
  double xi = bisect([p](double s) { return threshold_f(p, s); }, 1e-12, 1.0 - 1e-12, 1e-14);
  // one Newton polish via a central-difference slope
  const double d = 1e-7;
  const double slope = (threshold_f(p, xi + d) - threshold_f(p, xi - d)) / (2.0 * d);
  const double fx = threshold_f(p, xi);
  if (std::isfinite(slope) && slope != 0.0) {
    const double next = xi - fx / slope;
    if (next > 0.0 && next < 1.0 && std::abs(threshold_f(p, next)) < std::abs(fx)) xi = next;
  }
  r.xi = xi;
  r.residual = std::abs(threshold_f(p, xi));
  r.sign_changes = threshold_sign_scan(p);
  return r;
}

}  // namespace detail

/// Threshold for the delta graph: omega_1 = alpha^2 / (N^2 xi^2).
inline ThresholdResult instability_threshold_delta(double p, double alpha, int n_edges) {
  ThresholdResult r = detail::threshold_xi(p);
  r.omega_star = alpha * alpha / (double(n_edges) * n_edges * r.xi * r.xi);
  return r;
}

/// Threshold for the delta' line: omega_3 = 4 / (gamma^2 xi^2).
inline ThresholdResult instability_threshold_delta_prime(double p, double gamma) {
  ThresholdResult r = detail::threshold_xi(p);
  r.omega_star = 4.0 / (gamma * gamma * r.xi * r.xi);
  return r;
}

// ---------------------------------------------------------------------------
// scaling factors used by the blow-up set arguments
// ---------------------------------------------------------------------------

/// The unique lambda with I_omega(lambda V) = 0:
///   lambda^(p-1) = (||V'||^2 + omega||V||^2 + alpha|v(0)|^2) / ||V||_{p+1}^{p+1}.
inline double lambda_one(const GraphField& u, double alpha, double omega, double p) {
  const double pp1 = lp_norm_pow(u, p + 1.0);
  if (!(pp1 > 0.0)) throw std::domain_error("lambda_one: field must have positive L^{p+1} norm");
  const double num = mass(derivative(u)) + omega * mass(u) + alpha * std::norm(u.vertex());
  if (!(num > 0.0))
    throw std::domain_error("lambda_one: quadratic part is not positive for this field");
  return std::pow(num / pp1, 1.0 / (p - 1.0));
}

/// The dilation factor matching L^{p+1} norms:
///   lambda_0 = (||Phi||_{p+1}^{p+1} / ||V||_{p+1}^{p+1})^{2/(p-1)},
/// requiring ||V||_{p+1} >= ||Phi||_{p+1} so lambda_0 <= 1.
inline double lambda_zero(const GraphField& u, const GraphField& reference, double p) {
  const double nv = lp_norm_pow(u, p + 1.0);
  const double nphi = lp_norm_pow(reference, p + 1.0);
  if (!(nv > 0.0) || !(nphi > 0.0)) throw std::domain_error("lambda_zero: zero field");
  if (nv < nphi)
    throw std::domain_error("lambda_zero: requires ||V||_{p+1} >= ||Phi||_{p+1}");
  return std::pow(nphi / nv, 2.0 / (p - 1.0));
}

// ---------------------------------------------------------------------------
// the dilation comparison inequality
// ---------------------------------------------------------------------------

/// g(lambda) = beta (lambda^2 + (beta-3) lambda^beta) / (lambda (2-lambda))
///           - (2 lambda^beta - beta lambda^2 - 2 + beta) / (lambda-1)^2,
/// beta = (p-1)/2; nonpositive on (0,1) for p > 5.  Near lambda = 1 the second
/// quotient is evaluated from the binomial series of lambda^beta about 1, which
/// removes the 0/0 cancellation (both quotients tend to beta (beta-2)).
inline double g_dilation(double p, double lambda) {
  const long double beta = 0.5L * (static_cast<long double>(p) - 1.0L);
  const long double x = static_cast<long double>(lambda);
  const long double e = x - 1.0L;
  const long double xb = powl(x, beta);

  long double rhs;
  if (fabsl(e) < 0.5L) {
    long double acc = beta * (beta - 2.0L);
    long double bin = 0.5L * beta * (beta - 1.0L);  // binom(beta, 2)
    long double epow = 1.0L;
    for (int n = 3; n < 400; ++n) {
      bin *= (beta - (n - 1)) / n;
      epow *= e;
      const long double term = 2.0L * bin * epow;
      acc += term;
      if (fabsl(term) < 1e-24L * fabsl(acc) + 1e-300L) break;
    }
    rhs = acc;
  } else {
    rhs = (2.0L * xb - beta * x * x - 2.0L + beta) / (e * e);
  }
  const long double lhs = beta * (x * x + (beta - 3.0L) * xb) / (x * (2.0L - x));
  return static_cast<double>(lhs - rhs);
}

struct GInequalityReport {
  double max_g = 0.0;
  double argmax = 0.0;
  bool nonpositive = false;  // max_g <= 1e-12 over the scanned grid
};

/// Scan g on a uniform grid over (eps, 1-eps) and report the largest value.
inline GInequalityReport g_inequality_check(double p, int n_grid = 10000, double eps = 1e-6) {
  if (!(p > 5.0)) throw std::domain_error("g_inequality_check: p > 5 required");
  GInequalityReport r;
  r.max_g = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_grid; ++i) {
    const double lambda = eps + (1.0 - 2.0 * eps) * i / (n_grid - 1.0);
    const double g = g_dilation(p, lambda);
    if (g > r.max_g) {
      r.max_g = g;
      r.argmax = lambda;
    }
  }
  r.nonpositive = r.max_g <= 1e-12;
  return r;
}

// ---------------------------------------------------------------------------
// delta' dilation-instability condition
// ---------------------------------------------------------------------------

/// Left-hand side of the asymmetric-wave condition
///   ((p-5)/2)[int_{t1}^1 + int_{t2}^1](1-s^2)^{2/(p-1)} ds
///     - (1/(beta sqrt(omega))) [(1-t1^2)^{1/(p-1)} + (1-t2^2)^{1/(p-1)}]^2,
/// positive exactly when the dilation second variation of E_gamma is <= 0.
inline double delta_prime_instability_lhs(const DeltaPrimeParams& d) {
  if (d.branch == DeltaPrimeBranch::odd)
    throw std::invalid_argument("delta_prime_instability_lhs: asymmetric branches only");
  const double beta = 0.5 * (d.p - 1.0);
  const double ints = profile_shape_integral(d.p, d.t1) + profile_shape_integral(d.p, d.t2);
  const double e = 1.0 / (d.p - 1.0);
  const double s = std::pow(1.0 - d.t1 * d.t1, e) + std::pow(1.0 - d.t2 * d.t2, e);
  return 0.5 * (d.p - 5.0) * ints - s * s / (beta * std::sqrt(d.omega));
}

/// Empirical estimate of the frequency above which the asymmetric delta'
/// wave satisfies the dilation-instability condition: the sign change of the
/// condition along an omega sweep, located by bisection.  The sharp constant
/// is not available in closed form; treat this value as an estimate only.
inline double estimate_omega2(double gamma, double p, double rel_tol = 1e-10) {
  if (!(p > 5.0)) throw std::domain_error("estimate_omega2: p > 5 required");
  const double floor = (4.0 / (gamma * gamma)) * (p + 1.0) / (p - 1.0);
  auto lhs = [&](double omega) {
    return delta_prime_instability_lhs(
        resolve_delta_prime(gamma, omega, p, DeltaPrimeBranch::asymmetric));
  };
  double lo = floor * (1.0 + 1e-9);
  if (lhs(lo) > 0.0) return lo;  // already unstable at the existence boundary
  double hi = 2.0 * floor;
  int guard = 0;
  while (lhs(hi) <= 0.0) {
    hi *= 2.0;
    if (++guard > 60) throw std::runtime_error("estimate_omega2: no sign change found");
  }
  return bisect(lhs, lo, hi, rel_tol * hi);
}

// closed-form L^{p+1} norms of the delta' profiles, used for cross checks
inline double delta_prime_lp_norm_closed(const DeltaPrimeParams& d) {
  const double pref = 2.0 / ((d.p - 1.0) * std::sqrt(d.omega));
  const double amp_pow = std::pow(d.amplitude(), (d.p + 1.0) / (d.p - 1.0));
  if (d.branch == DeltaPrimeBranch::odd) {
    const double xi = 2.0 / (d.gamma * std::sqrt(d.omega));
    return 2.0 * pref * amp_pow * profile_shape_integral(d.p, xi);
  }
  return pref * amp_pow * (profile_shape_integral(d.p, d.t1) + profile_shape_integral(d.p, d.t2));
}

}  // namespace graphnls
