// graphnls: standing waves, variational functionals, instability thresholds,
// and time integration for the NLS equation with a delta vertex coupling on
// a star graph (and a delta' coupling on the line).
//
// Exit codes: 0 success, 1 parameter-regime or configuration error,
// 2 numerical failure, 3 verification checks failed, 4 run ended in a
// blow-up flag (evolve only; a flag is a reported outcome, not an error).

#include <CLI11.hpp>

#include <graphnls/experiments.hpp>

#include <cstdio>
#include <map>
#include <string>

using namespace graphnls;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRegime = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerifyFailed = 3;
constexpr int kExitBlowup = 4;

const std::map<std::string, DeltaPrimeBranch> kBranchNames{
    {"odd", DeltaPrimeBranch::odd},
    {"asymmetric", DeltaPrimeBranch::asymmetric},
    {"asymmetric-swapped", DeltaPrimeBranch::asymmetric_swapped}};

const std::map<std::string, Scheme> kSchemeNames{
    {"strang", Scheme::strang_split}, {"cn-relaxed", Scheme::crank_nicolson_relaxed}};

const std::map<std::string, OuterBC> kBcNames{{"dirichlet", OuterBC::dirichlet},
                                              {"neumann", OuterBC::neumann}};

void print_check_report(const CheckReport& rep) {
  for (const auto& r : rep.rows)
    std::printf("%-28s %13.6g  (tol %.2g)  %s\n", r.name.c_str(), r.value, r.tol,
                r.pass ? "pass" : "FAIL");
}

struct CliState {
  ExperimentSpec spec;
  std::string model = "delta";
  std::string snapshot;
  double lambda = 1.0;
  double q_exponent = 2.0;
};

void add_model_options(CLI::App* cmd, CliState& st) {
  cmd->add_option("--N", st.spec.n_edges, "number of edges");
  cmd->add_option("--alpha", st.spec.alpha, "delta coupling strength");
  cmd->add_option("--gamma", st.spec.gamma, "delta' coupling strength");
  cmd->add_option("--omega", st.spec.omega, "standing-wave frequency");
  cmd->add_option("--p", st.spec.p, "nonlinearity power");
  cmd->add_option("--k", st.spec.k, "number of edges on the shifted branch");
  cmd->add_option("--branch", st.spec.branch, "delta' branch")
      ->transform(CLI::CheckedTransformer(kBranchNames, CLI::ignore_case));
}

void add_grid_options(CLI::App* cmd, CliState& st) {
  cmd->add_option("--L", st.spec.length, "edge truncation length");
  cmd->add_option("--M", st.spec.n_points, "samples per edge");
}

void add_evolve_options(CLI::App* cmd, CliState& st) {
  cmd->add_option("--dt", st.spec.dt, "time step (<= 0.25 h^2)");
  cmd->add_option("--t-end", st.spec.t_end, "final time");
  cmd->add_option("--scheme", st.spec.scheme, "time scheme")
      ->transform(CLI::CheckedTransformer(kSchemeNames, CLI::ignore_case));
  cmd->add_option("--outer-bc", st.spec.outer_bc, "boundary at x = L")
      ->transform(CLI::CheckedTransformer(kBcNames, CLI::ignore_case));
  cmd->add_option("--monitor-stride", st.spec.monitor_stride, "steps between samples");
}

int cmd_profile(const CliState& st, const std::string& out) {
  if (st.model == "delta") {
    WaveParams w{st.spec.n_edges, st.spec.alpha, st.spec.omega, st.spec.p, st.spec.k};
    const StarGraphGrid grid(st.spec.n_edges, st.spec.length, st.spec.n_points);
    const GridCheck check = st.spec.force ? GridCheck::warn : GridCheck::reject;
    GraphField phi = st.lambda == 1.0 ? build_profile_delta(w, grid, check)
                                      : scaled_profile_delta(w, grid, st.lambda, check);
    write_snapshot(phi, out);
  } else {
    const DeltaPrimeParams d =
        resolve_delta_prime(st.spec.gamma, st.spec.omega, st.spec.p, st.spec.branch);
    const GridCheck check = st.spec.force ? GridCheck::warn : GridCheck::reject;
    LineField phi = st.lambda == 1.0
                        ? build_profile_delta_prime(d, st.spec.n_points, st.spec.length, check)
                        : scaled_profile_delta_prime(d, st.spec.n_points, st.spec.length,
                                                     st.lambda, check);
    write_snapshot(phi, out);
  }
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int cmd_functionals(const CliState& st) {
  const std::string kind = detail::snapshot_kind(st.snapshot);
  FunctionalReport r;
  if (kind == "graphfield") {
    const GraphField u = read_graph_snapshot(st.snapshot);
    r = functional_report_delta(u, st.spec.alpha, st.spec.omega, st.spec.p);
  } else {
    const LineField u = read_line_snapshot(st.snapshot);
    r = delta_prime_functionals(u, st.spec.gamma, st.spec.omega, st.spec.p);
  }
  std::printf("mass,energy,action,I,P,vertex_abs2\n");
  std::printf("%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.mass, r.energy, r.action, r.nehari,
              r.virial_p, r.vertex_abs2);
  return kExitOk;
}

int cmd_threshold(const CliState& st, bool use_gamma, const std::vector<double>& p_grid) {
  if (!p_grid.empty()) {
    ExperimentSpec spec = st.spec;
    spec.p_grid = p_grid;
    const auto rows = run_threshold_table(spec);
    std::printf("p,xi,omega_scaled,residual,sign_changes\n");
    for (const auto& r : rows)
      std::printf("%.6g,%.15g,%.15g,%.3g,%d\n", r.p, r.xi, r.omega_scaled, r.residual,
                  r.sign_changes);
    return kExitOk;
  }
  ThresholdResult th = use_gamma
                           ? instability_threshold_delta_prime(st.spec.p, st.spec.gamma)
                           : instability_threshold_delta(st.spec.p, st.spec.alpha, st.spec.n_edges);
  std::printf("p,xi,omega_star,residual,sign_changes\n");
  std::printf("%.6g,%.15g,%.15g,%.3g,%d\n", st.spec.p, th.xi, th.omega_star, th.residual,
              th.sign_changes);
  return kExitOk;
}

int cmd_evolve(const CliState& st) {
  EvolutionConfig cfg;
  cfg.dt = st.spec.dt;
  cfg.t_end = st.spec.t_end;
  cfg.scheme = st.spec.scheme;
  cfg.outer_bc = st.spec.outer_bc;
  cfg.monitor_stride = st.spec.monitor_stride;

  Metadata meta{{"alpha", std::to_string(st.spec.alpha)},
                {"gamma", std::to_string(st.spec.gamma)},
                {"omega", std::to_string(st.spec.omega)},
                {"p", std::to_string(st.spec.p)},
                {"dt", std::to_string(st.spec.dt)},
                {"t_end", std::to_string(st.spec.t_end)},
                {"lambda", std::to_string(st.lambda)}};

  TrajectoryRecord rec;
  const bool line_model =
      st.model == "deltaprime" ||
      (!st.snapshot.empty() && detail::snapshot_kind(st.snapshot) == "linefield");
  if (line_model) {
    LineField u0 = !st.snapshot.empty()
                       ? read_line_snapshot(st.snapshot)
                       : scaled_profile_delta_prime(
                             resolve_delta_prime(st.spec.gamma, st.spec.omega, st.spec.p,
                                                 st.spec.branch),
                             st.spec.n_points, st.spec.length, st.lambda);
    EvolveLineResult r = evolve_delta_prime(u0, cfg, st.spec.gamma, st.spec.omega, st.spec.p);
    rec = std::move(r.record);
    if (!st.spec.out_final.empty()) write_snapshot(r.final_state, st.spec.out_final);
  } else {
    WaveParams w{st.spec.n_edges, st.spec.alpha, st.spec.omega, st.spec.p, st.spec.k};
    const StarGraphGrid grid(st.spec.n_edges, st.spec.length, st.spec.n_points);
    GraphField u0 = !st.snapshot.empty() ? read_graph_snapshot(st.snapshot)
                                         : scaled_profile_delta(w, grid, st.lambda);
    EvolveResult r = evolve(u0, cfg, st.spec.alpha, st.spec.omega, st.spec.p);
    rec = std::move(r.record);
    if (!st.spec.out_final.empty()) write_snapshot(r.final_state, st.spec.out_final);
  }
  if (!st.spec.out_series.empty()) write_trajectory_csv(st.spec.out_series, rec, meta);

  if (rec.blowup_time) {
    std::printf("blow-up flagged at t = %.6g (%s)\n", *rec.blowup_time,
                to_string(rec.blowup_reason));
    return rec.blowup_reason == BlowupReason::nan_detected ? kExitNumerical : kExitBlowup;
  }
  std::printf("completed to t = %.6g\n", rec.times.back());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"standing waves and blow-up experiments for NLS with point couplings on graphs"};
  app.require_subcommand(1);
  // key=value file, scoped as "subcommand.option=value" (or a [subcommand]
  // section); explicit command-line flags win
  app.set_config("--config", "", "key=value file; flags win");

  CliState st;
  std::string out_path;
  bool threshold_gamma = false;

  auto* profile = app.add_subcommand("profile", "sample a standing wave and write a snapshot");
  profile->add_option("--model", st.model, "delta | deltaprime")
      ->check(CLI::IsMember({"delta", "deltaprime"}));
  add_model_options(profile, st);
  add_grid_options(profile, st);
  profile->add_option("--lambda", st.lambda, "mass-preserving dilation factor");
  profile->add_flag("--force", st.spec.force, "downgrade grid-resolution errors to warnings");
  profile->add_option("--out", out_path, "snapshot path")->required();

  auto* functionals = app.add_subcommand("functionals", "evaluate all functionals of a snapshot");
  functionals->add_option("--snapshot", st.snapshot, "field snapshot")->required();
  add_model_options(functionals, st);

  auto* threshold = app.add_subcommand("threshold", "instability frequency threshold");
  add_model_options(threshold, st);
  threshold->add_flag("--delta-prime", threshold_gamma, "use the delta' scaling 4/gamma^2");
  std::vector<double> p_grid;
  threshold->add_option("--p-grid", p_grid, "emit a table over these powers instead");
  threshold->add_option("--out", st.spec.out_csv, "table CSV (with --p-grid)");

  auto* evolve_cmd = app.add_subcommand("evolve", "integrate the flow from a snapshot or profile");
  evolve_cmd->add_option("--snapshot", st.snapshot, "initial state (else built from profile)");
  evolve_cmd->add_option("--model", st.model, "delta | deltaprime")
      ->check(CLI::IsMember({"delta", "deltaprime"}));
  add_model_options(evolve_cmd, st);
  add_grid_options(evolve_cmd, st);
  evolve_cmd->add_option("--lambda", st.lambda, "dilation of the initial profile");
  add_evolve_options(evolve_cmd, st);
  evolve_cmd->add_option("--out-series", st.spec.out_series, "trajectory CSV");
  evolve_cmd->add_option("--out-final", st.spec.out_final, "final-state snapshot");

  auto* blowup = app.add_subcommand("blowup", "dilation blow-up scan");
  add_model_options(blowup, st);
  add_grid_options(blowup, st);
  add_evolve_options(blowup, st);
  blowup->add_option("--lambdas", st.spec.lambdas, "dilation factors (> 1)");
  blowup->add_flag("--force", st.spec.force, "bypass the regime guard");
  blowup->add_option("--out", st.spec.out_csv, "scan CSV");
  blowup->add_option("--out-series", st.spec.out_series, "per-run trajectory CSV prefix");

  auto* stability = app.add_subcommand("stability", "long-time perturbed-profile contrast run");
  add_model_options(stability, st);
  add_grid_options(stability, st);
  add_evolve_options(stability, st);
  stability->add_option("--epsilon", st.spec.epsilon, "multiplicative perturbation");
  stability->add_flag("--force", st.spec.force, "bypass the regime guard");
  stability->add_option("--out-series", st.spec.out_series, "trajectory CSV");

  auto* dprime = app.add_subcommand("deltaprime", "delta' profile and instability suite");
  add_model_options(dprime, st);
  add_grid_options(dprime, st);
  add_evolve_options(dprime, st);
  dprime->add_flag("--force", st.spec.force, "bypass the regime guard");
  dprime->add_flag("!--no-dynamics", st.spec.run_dynamics, "skip the blow-up runs");
  dprime->add_option("--out", st.spec.out_csv, "check-report CSV");

  auto* verify = app.add_subcommand("verify", "profile verification report (exit 3 on failure)");
  add_model_options(verify, st);
  add_grid_options(verify, st);
  verify->add_flag("--force", st.spec.force, "downgrade grid-resolution errors to warnings");
  verify->add_option("--out", st.spec.out_csv, "report CSV");
  // verification wants a fine quadrature grid; override the evolution default
  verify->preparse_callback([&st](std::size_t) { st.spec.n_points = 200001; });

  for (CLI::App* sub : app.get_subcommands({})) sub->configurable();

  CLI11_PARSE(app, argc, argv);

  try {
    if (profile->parsed()) return cmd_profile(st, out_path);
    if (functionals->parsed()) return cmd_functionals(st);
    if (threshold->parsed()) return cmd_threshold(st, threshold_gamma, p_grid);
    if (evolve_cmd->parsed()) return cmd_evolve(st);
    if (blowup->parsed()) {
      const BlowupScanReport rep = run_blowup_scan(st.spec);
      std::printf("lambda,member,action_gap,t_blowup,virial_cap,reason\n");
      for (const auto& r : rep.rows)
        std::printf("%.6g,%d,%.10g,%.6g,%.6g,%s\n", r.lambda, r.member ? 1 : 0, r.action_gap,
                    r.t_blowup, r.virial_cap, to_string(r.reason));
      return kExitOk;
    }
    if (stability->parsed()) {
      const StabilityReport rep = run_stability_demo(st.spec);
      std::printf("max_modulus_deviation,blew_up,t_reached\n");
      std::printf("%.6g,%d,%.6g\n", rep.max_modulus_deviation, rep.blew_up ? 1 : 0, rep.t_reached);
      return kExitOk;
    }
    if (dprime->parsed()) {
      const DeltaPrimeSuiteReport rep = run_delta_prime_suite(st.spec);
      print_check_report(rep.checks);
      std::printf("omega2_estimate=%.6g omega3=%.6g t_blowup_odd=%.6g t_blowup_asym=%.6g\n",
                  rep.omega2_estimate, rep.omega3, rep.t_blowup_odd, rep.t_blowup_asym);
      return rep.checks.all_pass() ? kExitOk : kExitVerifyFailed;
    }
    if (verify->parsed()) {
      const CheckReport rep = run_verify_profile(st.spec);
      print_check_report(rep);
      if (!st.spec.out_csv.empty())
        write_check_csv(st.spec.out_csv, rep, spec_metadata(st.spec, "verify_profile"));
      return rep.all_pass() ? kExitOk : kExitVerifyFailed;
    }
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "regime error: %s\n", e.what());
    return kExitRegime;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitRegime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
