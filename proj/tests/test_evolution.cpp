#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <graphnls/evolution.hpp>
#include <graphnls/experiments.hpp>

#include "oracles.hpp"

#include <cmath>

using namespace graphnls;

namespace {

GraphField perturbed_soliton(const WaveParams& w, const StarGraphGrid& g, double amp, double kwave,
                             double x0) {
  return perturb_gaussian_bump(build_profile_delta(w, g), amp, x0, 1.0, kwave);
}

}  // namespace

TEST_CASE("config guard enforces the step-size policy") {
  StarGraphGrid g(3, 10.0, 1001);  // h = 0.01
  EvolutionConfig cfg;
  cfg.dt = 1e-4;  // above 0.25 h^2 = 2.5e-5
  CHECK_THROWS_AS(evolve(GraphField(g), cfg, 0.0, 1.0, 3.0), std::invalid_argument);
  cfg.dt = 2.5e-5;
  cfg.t_end = 1e-4;
  CHECK_NOTHROW(evolve(GraphField(g), cfg, 0.0, 1.0, 3.0));
}

TEST_CASE("zero state stays zero") {
  StarGraphGrid g(3, 10.0, 501);
  EvolutionConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = 0.05;
  const EvolveResult r = evolve(GraphField(g), cfg, -1.0, 2.0, 3.0);
  CHECK(r.record.completed);
  CHECK(sup_abs(r.final_state) == 0.0);
  const GraphField one_step = step(GraphField(g), cfg, -1.0, 3.0, 1e-4);
  CHECK(sup_abs(one_step) == 0.0);
}

TEST_CASE("linear regime reproduces the free-line Gaussian propagator") {
  // N = 2 with alpha = 0 is the free line; edge 0 carries x < 0
  const double a = 1.0, x0 = 10.0, kwave = -4.0, T = 0.5, L = 20.0;
  auto run = [&](int M) {
    StarGraphGrid grid(2, L, M);
    GraphField u0(grid);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < M; ++i) {
        const double X = (j == 0) ? -grid.x(i) : grid.x(i);
        u0.edges[j][i] = oracle::gaussian_packet(a, x0, kwave, 0.0, X);
      }
    u0.set_vertex(u0.edges[1][0]);
    EvolutionConfig cfg;
    cfg.dt = 0.25 * grid.h * grid.h;
    cfg.t_end = T;
    cfg.linear_only = true;
    cfg.monitor_stride = 1 << 30;
    const EvolveResult r = evolve(u0, cfg, 0.0, 0.0, 3.0);
    double sup = 0.0;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < M; ++i) {
        const double X = (j == 0) ? -grid.x(i) : grid.x(i);
        sup = std::max(sup, std::abs(r.final_state.edges[j][i] -
                                     oracle::gaussian_packet(a, x0, kwave, T, X)));
      }
    return sup;
  };
  const double coarse = run(501);   // h = 0.04
  const double fine = run(1001);    // h = 0.02
  CHECK(coarse < 3e-2);
  CHECK(fine < 8e-3);
  CHECK(coarse / fine > 3.0);  // O(h^2 + dt^2)
  CHECK(coarse / fine < 5.0);
}

TEST_CASE("standing wave keeps its modulus and conserves mass") {
  WaveParams w{3, -1.0, 2.0, 3.0, 0};
  const StarGraphGrid g(3, 40.0, 2001);  // h = 0.02
  const GraphField phi = build_profile_delta(w, g);
  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 0.25;
  cfg.monitor_stride = 100;
  double dev = 0.0;
  auto hook = [&](double, const GraphField& u) {
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < g.n_points; ++i)
        dev = std::max(dev, std::abs(std::abs(u.edges[j][i]) - std::abs(phi.edges[j][i])));
  };
  const EvolveResult r = evolve(phi, cfg, w.alpha, w.omega, w.p, hook);
  CHECK(r.record.completed);
  CHECK(dev < 4e-4);
  // record bookkeeping: equal series lengths, strictly increasing times
  CHECK(r.record.mass.size() == r.record.size());
  CHECK(r.record.virial_f.size() == r.record.size());
  CHECK(r.record.h1_norm.size() == r.record.size());
  for (std::size_t i = 1; i < r.record.size(); ++i)
    CHECK(r.record.times[i] > r.record.times[i - 1]);
  for (std::size_t i = 0; i < r.record.size(); ++i) {
    CHECK(std::abs(r.record.mass[i] - r.record.mass[0]) / r.record.mass[0] < 1e-11);
    CHECK(std::abs(r.record.energy[i] - r.record.energy[0]) /
              std::abs(r.record.energy[0]) <
          1e-5);
  }
}

TEST_CASE("energy drift reduces at second order along the coupled refinement") {
  // under the dt <= 0.25 h^2 policy the splitting error is O(h^4), so the
  // drift is set by the O(h^2) evaluation of the energy functional on the
  // discrete flow; the (h/2, dt/4) rerun cuts it by ~4
  WaveParams w{3, -1.0, 2.0, 3.0, 0};
  auto drift = [&](int M) {
    const StarGraphGrid g(3, 30.0, M);
    const GraphField u0 = perturbed_soliton(w, g, 0.3, 1.5, 3.0);
    EvolutionConfig cfg;
    cfg.dt = 0.25 * g.h * g.h;
    cfg.t_end = 0.1;
    cfg.monitor_stride = 50;
    const EvolveResult r = evolve(u0, cfg, w.alpha, w.omega, w.p);
    double d = 0.0;
    for (double e : r.record.energy)
      d = std::max(d, std::abs(e - r.record.energy.front()));
    return d;
  };
  const double d1 = drift(1501);  // h = 0.02
  const double d2 = drift(3001);  // h = 0.01
  CHECK(d1 / d2 > 3.0);
  CHECK(d1 / d2 < 5.0);
}

TEST_CASE("vertex conditions persist along the flow") {
  WaveParams w{3, -1.0, 2.0, 3.0, 0};
  const StarGraphGrid g(3, 30.0, 1501);
  const GraphField u0 = perturbed_soliton(w, g, 0.2, 1.0, 3.0);
  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 0.1;
  cfg.monitor_stride = 1 << 30;
  const EvolveResult r = evolve(u0, cfg, w.alpha, w.omega, w.p);
  CHECK(r.final_state.max_vertex_mismatch() == 0.0);  // one shared unknown
  // flux residual measured with the one-sided second-order stencil: O(h^2)
  cplx flux{0.0, 0.0};
  for (int j = 0; j < 3; ++j)
    flux += (-3.0 * r.final_state.edges[j][0] + 4.0 * r.final_state.edges[j][1] -
             r.final_state.edges[j][2]) /
            (2.0 * g.h);
  const double res = std::abs(flux - w.alpha * r.final_state.vertex());
  CHECK(res < 50.0 * g.h * g.h);
}

TEST_CASE("relaxed Crank-Nicolson agrees with the split scheme") {
  WaveParams w{3, -1.0, 2.0, 3.0, 0};
  const StarGraphGrid g(3, 30.0, 1501);
  const GraphField u0 = perturbed_soliton(w, g, 0.2, 1.0, 3.0);
  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 0.05;
  cfg.monitor_stride = 1 << 30;
  EvolutionConfig cfg_cn = cfg;
  cfg_cn.scheme = Scheme::crank_nicolson_relaxed;
  const EvolveResult rs = evolve(u0, cfg, w.alpha, w.omega, w.p);
  const EvolveResult rc = evolve(u0, cfg_cn, w.alpha, w.omega, w.p);
  double sup = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < g.n_points; ++i)
      sup = std::max(sup, std::abs(rs.final_state.edges[j][i] - rc.final_state.edges[j][i]));
  CHECK(sup < 5e-5);  // both are O(dt^2) paths of the same flow
  // the relaxation scheme conserves the discrete mass as well
  CHECK(std::abs(rc.record.mass.back() - rc.record.mass.front()) / rc.record.mass.front() <
        1e-11);
}

TEST_CASE("gauge covariance") {
  WaveParams w{3, 1.0, 2.0, 3.0, 0};
  const StarGraphGrid g(3, 30.0, 1001);
  const GraphField u0 = perturbed_soliton(w, g, 0.1, 0.5, 2.0);
  GraphField rotated = u0;
  const cplx phase = std::polar(1.0, 0.83);
  for (auto& e : rotated.edges)
    for (cplx& v : e) v *= phase;
  EvolutionConfig cfg;
  cfg.dt = 0.2 * g.h * g.h;
  cfg.t_end = 0.03;
  cfg.monitor_stride = 1 << 30;
  const EvolveResult r1 = evolve(u0, cfg, w.alpha, w.omega, w.p);
  const EvolveResult r2 = evolve(rotated, cfg, w.alpha, w.omega, w.p);
  double sup = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < g.n_points; ++i)
      sup = std::max(sup, std::abs(r2.final_state.edges[j][i] - phase * r1.final_state.edges[j][i]));
  CHECK(sup < 1e-12);
}

TEST_CASE("virial monitors track the flow derivatives of the weight") {
  WaveParams w{3, -1.0, 2.0, 3.0, 0};
  const StarGraphGrid g(3, 40.0, 2001);  // h = 0.02
  const GraphField u0 = perturbed_soliton(w, g, 0.4, 2.0, 3.0);
  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 0.2;
  cfg.monitor_stride = 25;  // sample spacing 2.5e-3
  const EvolveResult r = evolve(u0, cfg, w.alpha, w.omega, w.p);
  const auto& R = r.record;
  const double dt_s = R.times[1] - R.times[0];

  // one-sided second-order slope of f at t = 0 against 4 Im int x conj(u) u_x
  const double fp0 = (-3.0 * R.virial_f[0] + 4.0 * R.virial_f[1] - R.virial_f[2]) / (2.0 * dt_s);
  CHECK(std::abs(fp0 - R.virial_fprime[0]) / std::abs(R.virial_fprime[0]) < 1e-4);

  // central second difference of f against 8 P(u) along the trajectory
  double worst = 0.0;
  for (std::size_t s = 1; s + 1 < R.size(); ++s) {
    const double fpp =
        (R.virial_f[s - 1] - 2.0 * R.virial_f[s] + R.virial_f[s + 1]) / (dt_s * dt_s);
    worst = std::max(worst, std::abs(fpp - 8.0 * R.virial_p[s]) / std::abs(8.0 * R.virial_p[s]));
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("blow-up detection: flag, membership, caps") {
  const double alpha = 1.0, omega = 2.0, p = 6.0;
  WaveParams w{3, alpha, omega, p, 0};
  const StarGraphGrid g(3, 30.0, 3001);  // h = 0.01
  const MembershipReference ref = membership_reference(w, g);

  const GraphField phi = build_profile_delta(w, g);
  const MembershipReport at_profile = set_membership(phi, alpha, omega, p, BlowupSet::plus, ref);
  CHECK_FALSE(at_profile.member);  // boundary point: S = d, P = 0

  const GraphField u0 = scaled_profile_delta(w, g, 1.2);
  const MembershipReport m0 = set_membership(u0, alpha, omega, p, BlowupSet::plus, ref);
  CHECK(m0.member);
  CHECK(m0.slack_action > 0.0);
  CHECK(m0.slack_virial > 0.0);

  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 2.0;
  cfg.monitor_stride = 200;
  const EvolveResult r = evolve(u0, cfg, alpha, omega, p);
  REQUIRE(r.record.blowup_time.has_value());
  CHECK(r.record.blowup_reason == BlowupReason::h1_norm);
  const double cap =
      (-r.record.virial_fprime[0] -
       std::sqrt(r.record.virial_fprime[0] * r.record.virial_fprime[0] +
                 32.0 * m0.slack_action * r.record.virial_f[0])) /
      (-16.0 * m0.slack_action);
  CHECK(*r.record.blowup_time <= cap);
  // action and virial memberships persist at every sample strictly before the flag
  for (std::size_t i = 0; i + 1 < r.record.size(); ++i) {
    CHECK(ref.action - r.record.action[i] > 0.0);
    CHECK(r.record.virial_p[i] < 0.0);
  }
  // concavity bound: f'' = 8P <= 16 (S - d) while the core is resolved
  const double bound = -16.0 * m0.slack_action;
  for (std::size_t i = 0; i + 1 < r.record.size(); ++i)
    if (r.record.amplitude[i] < 3.0 * r.record.amplitude.front())
      CHECK(8.0 * r.record.virial_p[i] <= bound + 1e-6);
  // post-hoc scan agrees with the inline flag
  const auto scan = detect_blowup(r.record, cfg);
  REQUIRE(scan.has_value());
  CHECK(scan->second == BlowupReason::h1_norm);
}

TEST_CASE("refinement near the detector threshold keeps the flag") {
  WaveParams w{3, 1.0, 2.0, 6.0, 0};
  const StarGraphGrid g(3, 30.0, 3001);
  const GraphField u0 = scaled_profile_delta(w, g, 1.2);
  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 1.0;
  cfg.monitor_stride = 200;
  cfg.refine_on_blowup = true;
  const EvolveResult r = evolve(u0, cfg, 1.0, 2.0, 6.0);
  REQUIRE(r.record.blowup_time.has_value());
  CHECK(*r.record.blowup_time > 0.15);
  CHECK(*r.record.blowup_time < 0.3);
}

TEST_CASE("neumann outer boundary also conserves mass") {
  WaveParams w{3, -1.0, 2.0, 3.0, 0};
  const StarGraphGrid g(3, 30.0, 1501);
  const GraphField phi = build_profile_delta(w, g);
  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 0.05;
  cfg.outer_bc = OuterBC::neumann;
  cfg.monitor_stride = 100;
  const EvolveResult r = evolve(phi, cfg, w.alpha, w.omega, w.p);
  CHECK(r.record.completed);
  CHECK(std::abs(r.record.mass.back() - r.record.mass.front()) / r.record.mass.front() < 1e-11);
}

TEST_CASE("minus-set membership for attractive coupling above the threshold") {
  const double p = 6.0, alpha = -1.0;
  const double omega = 1.5 * instability_threshold_delta(p, alpha, 3).omega_star;
  WaveParams w{3, alpha, omega, p, 0};
  const StarGraphGrid g(3, 30.0, 3001);
  const MembershipReference ref = membership_reference(w, g);
  const GraphField u0 = scaled_profile_delta(w, g, 1.1);
  const MembershipReport m = set_membership(u0, alpha, omega, p, BlowupSet::minus, ref);
  CHECK(m.member);
  CHECK(m.slack_lp > 0.0);
  CHECK(m.slack_mass > -1e-5 * ref.l2);  // exact continuum tie, quadrature-level slack
}

TEST_CASE("stable small data never trips the detector") {
  StarGraphGrid g(3, 20.0, 1001);
  const GraphField u0 = GraphField::sample(g, [](double x) { return 0.3 * std::exp(-x * x); });
  EvolutionConfig cfg;
  cfg.dt = 0.25 * g.h * g.h;
  cfg.t_end = 0.5;
  cfg.monitor_stride = 100;
  const EvolveResult r = evolve(u0, cfg, -1.0, 1.0, 3.0);
  CHECK(r.record.completed);
  CHECK_FALSE(r.record.blowup_time.has_value());
}

TEST_CASE("non-finite data flags immediately") {
  StarGraphGrid g(3, 10.0, 501);
  GraphField u0 = GraphField::sample(g, [](double x) { return std::exp(-x); });
  u0.edges[1][5] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  EvolutionConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = 0.1;
  const EvolveResult r = evolve(u0, cfg, -1.0, 1.0, 3.0);
  REQUIRE(r.record.blowup_time.has_value());
  CHECK(r.record.blowup_reason == BlowupReason::nan_detected);
  CHECK(*r.record.blowup_time == 0.0);

  TrajectoryRecord rec;
  rec.times = {0.0, 0.1};
  rec.mass = {1.0, 1.0};
  rec.h1_norm = {1.0, std::numeric_limits<double>::quiet_NaN()};
  rec.amplitude = {1.0, 1.0};
  const auto scan = detect_blowup(rec, cfg);
  REQUIRE(scan.has_value());
  CHECK(scan->second == BlowupReason::nan_detected);
  CHECK(scan->first == 0.1);
}

TEST_CASE("delta' evolution: oddness is preserved and the stable window holds") {
  // gamma = 2, p = 6: the odd wave is orbitally stable for omega in (1, 7/5)
  const double gamma = 2.0, omega = 1.2, p = 6.0;
  const DeltaPrimeParams d = resolve_delta_prime(gamma, omega, p, DeltaPrimeBranch::odd);
  const int M = 2001;
  const double L = 30.0;
  const LineField phi = build_profile_delta_prime(d, M, L);
  EvolutionConfig cfg;
  cfg.dt = 0.9 * 0.25 * phi.h * phi.h;
  cfg.t_end = 1.0;
  cfg.monitor_stride = 400;
  double odd_dev = 0.0, mod_dev = 0.0;
  auto hook = [&](double, const LineField& u) {
    for (int i = 0; i < u.n_points; ++i) {
      odd_dev = std::max(odd_dev, std::abs(u.left[i] + u.right[i]));
      mod_dev = std::max(mod_dev, std::abs(std::abs(u.right[i]) - std::abs(phi.right[i])));
    }
  };
  const EvolveLineResult r = evolve_delta_prime(phi, cfg, gamma, omega, p, hook);
  CHECK(r.record.completed);
  CHECK(odd_dev < 1e-10);
  CHECK(mod_dev < 1e-4);
}

TEST_CASE("delta' evolution conserves mass and energy") {
  const double gamma = 2.0, omega = 5.0, p = 6.0;
  const DeltaPrimeParams d = resolve_delta_prime(gamma, omega, p, DeltaPrimeBranch::odd);
  LineField u0 = build_profile_delta_prime(d, 3001, 15.0);
  for (int i = 0; i < u0.n_points; ++i) u0.right[i] *= 1.02;  // break the symmetry a little
  EvolutionConfig cfg;
  cfg.dt = 0.25 * u0.h * u0.h;
  cfg.t_end = 0.1;
  cfg.monitor_stride = 100;
  const EvolveLineResult r = evolve_delta_prime(u0, cfg, gamma, omega, p);
  CHECK(r.record.completed);
  const auto& R = r.record;
  for (std::size_t i = 0; i < R.size(); ++i) {
    CHECK(std::abs(R.mass[i] - R.mass[0]) / R.mass[0] < 1e-11);
    CHECK(std::abs(R.energy[i] - R.energy[0]) / std::abs(R.energy[0]) < 1e-4);
  }
}
