#pragma once

#include "evolution.hpp"
#include "functionals.hpp"

#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace graphnls {

inline constexpr const char* kVersion = "0.1.0";

/// Resolved parameters of one experiment run.  Defaults suit the shipped
/// demonstrations; drivers only read the fields they use.
struct ExperimentSpec {
  // model
  int n_edges = 3;
  double alpha = -1.0;
  double gamma = 2.0;
  double omega = 2.0;
  double p = 3.0;
  int k = 0;
  DeltaPrimeBranch branch = DeltaPrimeBranch::odd;
  // numerics
  double length = 40.0;
  int n_points = 4001;
  double dt = 2.5e-5;
  double t_end = 1.0;
  int monitor_stride = 100;
  Scheme scheme = Scheme::strang_split;
  OuterBC outer_bc = OuterBC::dirichlet;
  // perturbations
  std::vector<double> lambdas = {1.05, 1.1, 1.2};
  double epsilon = 0.01;
  // threshold table
  std::vector<double> p_grid = {5.5, 6.0, 7.0, 9.0};
  // control
  bool force = false;        // bypass regime guards (logged in output metadata)
  bool run_dynamics = true;  // delta' suite: include the slow blow-up runs
  // outputs ("" = no file)
  std::string out_csv;
  std::string out_series;
  std::string out_final;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline void write_metadata(std::FILE* fp, const Metadata& meta) {
  std::fprintf(fp, "# version=%s\n", kVersion);
  for (const auto& [key, value] : meta) std::fprintf(fp, "# %s=%s\n", key.c_str(), value.c_str());
}

namespace detail {
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
}  // namespace detail

/// Full resolved parameter set of an experiment, for the output headers.
inline Metadata spec_metadata(const ExperimentSpec& s, const std::string& experiment) {
  return {{"experiment", experiment},
          {"N", std::to_string(s.n_edges)},
          {"alpha", detail::num(s.alpha)},
          {"gamma", detail::num(s.gamma)},
          {"omega", detail::num(s.omega)},
          {"p", detail::num(s.p)},
          {"k", std::to_string(s.k)},
          {"L", detail::num(s.length)},
          {"M", std::to_string(s.n_points)},
          {"dt", detail::num(s.dt)},
          {"t_end", detail::num(s.t_end)},
          {"scheme", s.scheme == Scheme::strang_split ? "strang" : "cn-relaxed"},
          {"forced", s.force ? "1" : "0"}};
}

inline void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec,
                                 const Metadata& meta) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  write_metadata(fp, meta);
  std::fprintf(fp, "t,mass,energy,action,I,P,f,fprime,h1,tailmass\n");
  for (std::size_t i = 0; i < rec.size(); ++i)
    std::fprintf(fp, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                 rec.times[i], rec.mass[i], rec.energy[i], rec.action[i], rec.nehari[i],
                 rec.virial_p[i], rec.virial_f[i], rec.virial_fprime[i], rec.h1_norm[i],
                 rec.tail[i]);
  std::fclose(fp);
}

// ---------------------------------------------------------------------------
// shipped perturbation families
// ---------------------------------------------------------------------------

/// (1 + eps) V, the multiplicative family.
inline GraphField perturb_multiplicative(const GraphField& u, double eps) {
  GraphField out = u;
  for (auto& e : out.edges)
    for (cplx& v : e) v *= (1.0 + eps);
  return out;
}

/// V + amp exp(-(x-x0)^2/sigma^2) exp(i k x) on every edge; a traveling
/// bump, so the perturbed state carries momentum and a nonzero virial slope.
inline GraphField perturb_gaussian_bump(const GraphField& u, double amp, double x0, double sigma,
                                        double k_wave) {
  GraphField out = u;
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (auto& e : out.edges)
    for (int i = 0; i < u.grid.n_points; ++i) {
      const double x = u.grid.x(i);
      e[i] += amp * std::exp(-(x - x0) * (x - x0) * inv_s2) * std::polar(1.0, k_wave * x);
    }
  out.set_vertex(out.edges[0][0]);
  return out;
}

// the third family, the mass-preserving dilation V^lambda, is
// scale_field / scaled_profile_delta in profiles.hpp

struct CheckRow {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct CheckReport {
  std::vector<CheckRow> rows;
  void add(const std::string& name, double value, double tol) {
    rows.push_back({name, value, tol, std::abs(value) <= tol});
  }
  void add_flag(const std::string& name, bool ok) {
    rows.push_back({name, ok ? 0.0 : 1.0, 0.5, ok});
  }
  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

inline void write_check_csv(const std::string& path, const CheckReport& rep, const Metadata& meta) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("write_check_csv: cannot open " + path);
  write_metadata(fp, meta);
  std::fprintf(fp, "check,value,tol,pass\n");
  for (const auto& r : rep.rows)
    std::fprintf(fp, "%s,%.6g,%.3g,%d\n", r.name.c_str(), r.value, r.tol, r.pass ? 1 : 0);
  std::fclose(fp);
}

// ---------------------------------------------------------------------------
// profile verification
// ---------------------------------------------------------------------------

/// Residual and identity checks of one sampled standing wave: stationary
/// equation, vertex conditions, Nehari and virial memberships, and the
/// closed-form norm/vertex identities (k = 0 only for the closed forms).
inline CheckReport run_verify_profile(const ExperimentSpec& spec) {
  WaveParams w{spec.n_edges, spec.alpha, spec.omega, spec.p, spec.k};
  const StarGraphGrid grid(spec.n_edges, spec.length, spec.n_points);
  const GridCheck check = spec.force ? GridCheck::warn : GridCheck::reject;
  const GraphField phi = build_profile_delta(w, grid, check);

  CheckReport rep;
  const ProfileResiduals res = profile_residuals_delta(phi, spec.alpha, spec.omega, spec.p);
  rep.add("stationary_interior_sup", res.interior_sup, 1e-5);
  rep.add("vertex_continuity", res.vertex_mismatch, 1e-12);
  rep.add("vertex_flux", res.flux, 1e-5);

  const double pp1 = lp_norm_pow(phi, spec.p + 1.0);
  const FunctionalReport fr = functional_report_delta(phi, spec.alpha, spec.omega, spec.p);
  rep.add("nehari_rel", fr.nehari / pp1, 1e-6);
  rep.add("virial_rel", fr.virial_p / pp1, 1e-6);

  if (spec.k == 0) {
    const double closed = profile_lp_norm_closed(w);
    rep.add("lp_norm_closed_rel", (pp1 - closed) / closed, 1e-7);
    const double d_level = dc_ground_level(w);
    rep.add("action_level_rel", (fr.action - d_level) / d_level, 1e-6);
    const double v2 = vertex_abs2_closed(w);
    rep.add("vertex_value_rel", (fr.vertex_abs2 - v2) / v2, 1e-9);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// blow-up scan over a dilation list
// ---------------------------------------------------------------------------

struct BlowupRow {
  double lambda = 1.0;
  bool member = false;
  double action_gap = 0.0;  // S_omega(U0) - d(omega), negative inside the set
  double t_blowup = -1.0;   // < 0 means no flag before t_end
  double virial_cap = -1.0; // upper bound on the blow-up time when it applies
  BlowupReason reason = BlowupReason::none;
};

struct BlowupScanReport {
  std::vector<BlowupRow> rows;
  double d_level = 0.0;
};

/// Root of f(0) + f'(0) t + 8 (S - d) t^2, the concavity bound on the time
/// the virial weight can stay positive; requires S < d.
inline double virial_time_cap(double f0, double fp0, double action_gap) {
  const double a = 8.0 * action_gap;
  if (!(a < 0.0)) return -1.0;
  const double disc = fp0 * fp0 - 4.0 * a * f0;
  return (-fp0 - std::sqrt(disc)) / (2.0 * a);
}

inline void guard_blowup_regime(const ExperimentSpec& spec) {
  if (spec.force) return;
  if (spec.alpha > 0.0) {
    if (!(spec.p >= 5.0))
      throw std::domain_error("blowup_scan: alpha > 0 requires p >= 5");
  } else if (spec.alpha < 0.0) {
    if (!(spec.p > 5.0))
      throw std::domain_error("blowup_scan: alpha < 0 requires p > 5");
    const ThresholdResult th = instability_threshold_delta(spec.p, spec.alpha, spec.n_edges);
    if (!(spec.omega >= th.omega_star))
      throw std::domain_error("blowup_scan: alpha < 0 requires omega >= omega_1");
  } else if (!(spec.p >= 5.0)) {
    throw std::domain_error("blowup_scan: alpha = 0 requires p >= 5");
  }
  for (double l : spec.lambdas)
    if (!(l > 1.0)) throw std::domain_error("blowup_scan: dilation factors must exceed 1");
}

inline BlowupScanReport run_blowup_scan(const ExperimentSpec& spec) {
  guard_blowup_regime(spec);
  WaveParams w{spec.n_edges, spec.alpha, spec.omega, spec.p, 0};
  const StarGraphGrid grid(spec.n_edges, spec.length, spec.n_points);
  const MembershipReference ref = membership_reference(w, grid);
  const BlowupSet which = spec.alpha < 0.0 ? BlowupSet::minus : BlowupSet::plus;

  EvolutionConfig cfg;
  cfg.dt = spec.dt;
  cfg.t_end = spec.t_end;
  cfg.scheme = spec.scheme;
  cfg.outer_bc = spec.outer_bc;
  cfg.monitor_stride = spec.monitor_stride;

  BlowupScanReport out;
  out.d_level = ref.action;
  for (double lambda : spec.lambdas) {
    const GraphField u0 = scaled_profile_delta(w, grid, lambda);
    BlowupRow row;
    row.lambda = lambda;
    const MembershipReport mem = set_membership(u0, spec.alpha, spec.omega, spec.p, which, ref);
    row.member = mem.member;
    row.action_gap = -mem.slack_action;
    const EvolveResult r = evolve(u0, cfg, spec.alpha, spec.omega, spec.p);
    row.virial_cap =
        virial_time_cap(r.record.virial_f.front(), r.record.virial_fprime.front(), row.action_gap);
    if (r.record.blowup_time) {
      row.t_blowup = *r.record.blowup_time;
      row.reason = r.record.blowup_reason;
    }
    out.rows.push_back(row);
    if (!spec.out_series.empty()) {
      char path[1024];
      std::snprintf(path, sizeof path, "%s.lambda%.4g.csv", spec.out_series.c_str(), lambda);
      Metadata meta = spec_metadata(spec, "blowup_scan");
      meta.emplace_back("lambda", detail::num(lambda));
      write_trajectory_csv(path, r.record, meta);
    }
  }
  if (!spec.out_csv.empty()) {
    std::FILE* fp = std::fopen(spec.out_csv.c_str(), "w");
    if (!fp) throw std::runtime_error("run_blowup_scan: cannot open " + spec.out_csv);
    write_metadata(fp, spec_metadata(spec, "blowup_scan"));
    std::fprintf(fp, "lambda,member,action_gap,t_blowup,virial_cap,reason\n");
    for (const auto& r : out.rows)
      std::fprintf(fp, "%.6g,%d,%.10g,%.6g,%.6g,%s\n", r.lambda, r.member ? 1 : 0, r.action_gap,
                   r.t_blowup, r.virial_cap, to_string(r.reason));
    std::fclose(fp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// long-time stability demonstration
// ---------------------------------------------------------------------------

struct StabilityReport {
  double max_modulus_deviation = 0.0;
  bool blew_up = false;
  double t_reached = 0.0;
};

/// Evolve a multiplicative (1+eps) perturbation of the ground profile and
/// track the sup deviation of |u| from the unperturbed profile.  This is a
/// qualitative contrast run against the blow-up scans.
inline StabilityReport run_stability_demo(const ExperimentSpec& spec) {
  if (!spec.force && !(spec.p < 5.0))
    throw std::domain_error("stability_demo: contrast run expects p < 5");
  WaveParams w{spec.n_edges, spec.alpha, spec.omega, spec.p, 0};
  const StarGraphGrid grid(spec.n_edges, spec.length, spec.n_points);
  const GraphField phi = build_profile_delta(w, grid);
  const GraphField u0 = perturb_multiplicative(phi, spec.epsilon);

  EvolutionConfig cfg;
  cfg.dt = spec.dt;
  cfg.t_end = spec.t_end;
  cfg.scheme = spec.scheme;
  cfg.outer_bc = spec.outer_bc;
  cfg.monitor_stride = spec.monitor_stride;

  StabilityReport rep;
  auto hook = [&](double, const GraphField& u) {
    double dev = 0.0;
    for (int j = 0; j < u.grid.n_edges; ++j)
      for (int i = 0; i < u.grid.n_points; ++i)
        dev = std::max(dev, std::abs(std::abs(u.edges[j][i]) - std::abs(phi.edges[j][i])));
    rep.max_modulus_deviation = std::max(rep.max_modulus_deviation, dev);
  };
  const EvolveResult r = evolve(u0, cfg, spec.alpha, spec.omega, spec.p, hook);
  rep.blew_up = r.record.blowup_time.has_value();
  rep.t_reached = r.record.times.back();
  if (!spec.out_series.empty())
    {
    Metadata meta = spec_metadata(spec, "stability_demo");
    meta.emplace_back("epsilon", detail::num(spec.epsilon));
    write_trajectory_csv(spec.out_series, r.record, meta);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// threshold table
// ---------------------------------------------------------------------------

struct ThresholdRow {
  double p = 0.0;
  double xi = 0.0;
  double omega_scaled = 0.0;  // omega_1 N^2/alpha^2 = 1/xi^2
  double residual = 0.0;
  int sign_changes = 1;
};

inline std::vector<ThresholdRow> run_threshold_table(const ExperimentSpec& spec) {
  std::vector<ThresholdRow> rows;
  for (double p : spec.p_grid) {
    const ThresholdResult th = instability_threshold_delta(p, 1.0, 1);
    rows.push_back({p, th.xi, 1.0 / (th.xi * th.xi), th.residual, th.sign_changes});
  }
  if (!spec.out_csv.empty()) {
    std::FILE* fp = std::fopen(spec.out_csv.c_str(), "w");
    if (!fp) throw std::runtime_error("run_threshold_table: cannot open " + spec.out_csv);
    write_metadata(fp, {{"experiment", "threshold_table"}});  // p-grid emitted per row
    std::fprintf(fp, "p,xi,omega_scaled,residual,sign_changes\n");
    for (const auto& r : rows)
      std::fprintf(fp, "%.6g,%.15g,%.15g,%.3g,%d\n", r.p, r.xi, r.omega_scaled, r.residual,
                   r.sign_changes);
    std::fclose(fp);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// delta' suite
// ---------------------------------------------------------------------------

struct DeltaPrimeSuiteReport {
  CheckReport checks;
  double omega2_estimate = 0.0;  // empirical dilation-instability onset
  double omega3 = 0.0;
  double t_blowup_odd = -1.0;
  double t_blowup_asym = -1.0;
};

/// Build the odd and asymmetric delta' waves, verify their vertex and
/// stationary conditions plus the closed-form identities, locate the
/// empirical instability onset of the asymmetric branch, and (optionally)
/// run the dilation blow-up experiments from both branches.
inline DeltaPrimeSuiteReport run_delta_prime_suite(const ExperimentSpec& spec) {
  DeltaPrimeSuiteReport rep;
  const double gamma = spec.gamma, p = spec.p;
  if (!spec.force && !(p > 5.0))
    throw std::domain_error("delta_prime_suite: instability experiments require p > 5");

  // odd branch at the requested frequency
  {
    const DeltaPrimeParams d = resolve_delta_prime(gamma, spec.omega, p, DeltaPrimeBranch::odd);
    const LineField u = build_profile_delta_prime(d, spec.n_points, spec.length);
    const DeltaPrimeResiduals res = profile_residuals_delta_prime(u, gamma, spec.omega, p);
    rep.checks.add("odd_stationary_sup", res.interior_sup, 1e-5);
    rep.checks.add("odd_derivative_continuity", res.derivative_mismatch, 1e-5);
    rep.checks.add("odd_jump_condition", res.jump, 1e-5);
    double antisym = 0.0;
    for (int i = 0; i < u.n_points; ++i)
      antisym = std::max(antisym, std::abs(u.left[i] + u.right[i]));
    rep.checks.add("odd_antisymmetry", antisym, 1e-14);
    const double pp1 = lp_norm_pow(u, p + 1.0);
    const FunctionalReport fr = delta_prime_functionals(u, gamma, spec.omega, p);
    rep.checks.add("odd_nehari_rel", fr.nehari / pp1, 1e-6);
    rep.checks.add("odd_virial_rel", fr.virial_p / pp1, 1e-6);
    const double closed = delta_prime_lp_norm_closed(d);
    rep.checks.add("odd_lp_norm_closed_rel", (pp1 - closed) / closed, 5e-7);
  }

  // asymmetric branches at a frequency above their existence floor
  const double omega_as =
      std::max(spec.omega, 1.5 * (4.0 / (gamma * gamma)) * (p + 1.0) / (p - 1.0));
  {
    const DeltaPrimeParams d =
        resolve_delta_prime(gamma, omega_as, p, DeltaPrimeBranch::asymmetric);
    const T1T2Solution s = solve_t1_t2(gamma, omega_as, p);
    rep.checks.add("t1t2_residual_symmetry", s.residual_symmetry, 1e-12);
    rep.checks.add("t1t2_residual_sum", s.residual_sum, 1e-12);
    const LineField u = build_profile_delta_prime(d, spec.n_points, spec.length);
    const DeltaPrimeResiduals res = profile_residuals_delta_prime(u, gamma, omega_as, p);
    rep.checks.add("asym_stationary_sup", res.interior_sup, 1e-5);
    rep.checks.add("asym_derivative_continuity", res.derivative_mismatch, 1e-5);
    rep.checks.add("asym_jump_condition", res.jump, 1e-5);
    const double pp1 = lp_norm_pow(u, p + 1.0);
    const FunctionalReport fr = delta_prime_functionals(u, gamma, omega_as, p);
    rep.checks.add("asym_nehari_rel", fr.nehari / pp1, 1e-6);
    rep.checks.add("asym_virial_rel", fr.virial_p / pp1, 1e-6);
    // swapped branch carries the same functional values by reflection
    const DeltaPrimeParams ds =
        resolve_delta_prime(gamma, omega_as, p, DeltaPrimeBranch::asymmetric_swapped);
    const LineField us = build_profile_delta_prime(ds, spec.n_points, spec.length);
    const FunctionalReport fs = delta_prime_functionals(us, gamma, omega_as, p);
    rep.checks.add("swapped_action_match", fs.action - fr.action, 1e-10 * std::abs(fr.action));
    rep.checks.add("swapped_mass_match", fs.mass - fr.mass, 1e-10 * fr.mass);
  }

  // large-omega asymptotics of the t1/t2 pair
  {
    const double omega_large = 1e4;
    const T1T2Solution s = solve_t1_t2(gamma, omega_large, p);
    const double c = gamma * std::sqrt(omega_large);
    rep.checks.add("t1_asymptotic_rel", (s.t1 - 1.0 / c) / (1.0 / c), 0.05);
    const double gap_pred = 0.5 * std::pow(c, -(p - 1.0));
    rep.checks.add("t2_gap_asymptotic_rel", (s.t2_gap - gap_pred) / gap_pred, 0.05);
  }

  rep.omega2_estimate = estimate_omega2(gamma, p);
  rep.omega3 = instability_threshold_delta_prime(p, gamma).omega_star;

  if (spec.run_dynamics) {
    EvolutionConfig cfg;
    cfg.dt = spec.dt;
    cfg.t_end = spec.t_end;
    cfg.scheme = spec.scheme;
    cfg.monitor_stride = spec.monitor_stride;

    const double omega_odd = 1.2 * rep.omega3;
    const DeltaPrimeParams d_odd = resolve_delta_prime(gamma, omega_odd, p, DeltaPrimeBranch::odd);
    const LineField u_odd = scaled_profile_delta_prime(d_odd, spec.n_points, spec.length, 1.1);
    const EvolveLineResult r_odd = evolve_delta_prime(u_odd, cfg, gamma, omega_odd, p);
    rep.t_blowup_odd = r_odd.record.blowup_time.value_or(-1.0);
    rep.checks.add_flag("odd_dilation_blowup", r_odd.record.blowup_time.has_value());

    const double omega_asym = 1.2 * std::max(rep.omega2_estimate, rep.omega3);
    const DeltaPrimeParams d_as =
        resolve_delta_prime(gamma, omega_asym, p, DeltaPrimeBranch::asymmetric);
    const LineField u_as = scaled_profile_delta_prime(d_as, spec.n_points, spec.length, 1.1);
    const EvolveLineResult r_as = evolve_delta_prime(u_as, cfg, gamma, omega_asym, p);
    rep.t_blowup_asym = r_as.record.blowup_time.value_or(-1.0);
    rep.checks.add_flag("asym_dilation_blowup", r_as.record.blowup_time.has_value());
  }

  if (!spec.out_csv.empty()) {
    Metadata meta = spec_metadata(spec, "delta_prime_suite");
    meta.emplace_back("omega2_estimate", detail::num(rep.omega2_estimate));
    meta.emplace_back("omega3", detail::num(rep.omega3));
    write_check_csv(spec.out_csv, rep.checks, meta);
  }
  return rep;
}

}  // namespace graphnls
