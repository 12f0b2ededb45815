#include <doctest.h>

#include <cmath>

#include "covert_pursuit/errors.hpp"
#include "covert_pursuit/pdcae_solver.hpp"
#include "covert_pursuit/report.hpp"

using namespace covert;

namespace {

ScenarioConfig short_mission(std::size_t n) {
  ScenarioConfig cfg;
  cfg.n_slots = n;
  cfg.horizon_T = cfg.delta * static_cast<double>(n);
  return cfg;
}

}  // namespace

TEST_CASE("momentum coefficients follow the accelerated recursion") {
  ExtrapolationState st;
  CHECK(next_beta(st) == 0.0);
  CHECK(next_beta(st) == 0.0);
  CHECK(next_beta(st) == doctest::Approx(0.28175352512532082).epsilon(1e-14));
  CHECK(next_beta(st) == doctest::Approx(0.434042782780302).epsilon(1e-14));
  double prev = 0.434042782780302;
  for (int i = 0; i < 40; ++i) {
    const double b = next_beta(st);
    CHECK(b > prev);
    CHECK(b < 1.0);
    prev = b;
  }
}

TEST_CASE("momentum restarts after each period") {
  ExtrapolationState st;
  st.restart_period = 3;
  std::vector<double> seq;
  for (int i = 0; i < 7; ++i) seq.push_back(next_beta(st));
  CHECK(seq[0] == 0.0);
  CHECK(seq[2] > 0.0);
  CHECK(seq[3] == 0.0);
  CHECK(seq[4] == 0.0);
  CHECK(seq[5] == seq[2]);
  CHECK(seq[6] == 0.0);
  st.restart();
  CHECK(next_beta(st) == 0.0);
}

TEST_CASE("extrapolation") {
  Eigen::VectorXd a(2), b(2);
  a << 3.0, 1.0;
  b << 1.0, 1.0;
  const Eigen::VectorXd e = extrapolate(a, b, 0.5);
  CHECK(e[0] == 4.0);
  CHECK(e[1] == 1.0);

  TrajectoryPlan cur, prev;
  cur.waypoints = {{0, 0, 102}, {2, 1, 103}};
  cur.q = {0.8};
  prev.waypoints = {{0, 0, 102}, {1, 1, 102}};
  prev.q = {1.0};
  const TrajectoryPlan p = extrapolate(cur, prev, 0.25);
  CHECK(p.waypoints[0].z == 102.0);
  CHECK(p.waypoints[1].x == doctest::Approx(2.25));
  CHECK(p.waypoints[1].z == doctest::Approx(103.25));
  CHECK(p.q[0] == doctest::Approx(0.75));
  CHECK(extrapolate(cur, prev, 0.0).waypoints[1].x == 2.0);
}

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::Proposed, Scheme::DKO, Scheme::ACO, Scheme::NDP, Scheme::DST, Scheme::MDR}) {
    CHECK(parse_scheme(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_scheme("Proposed"), UsageError);
  CHECK_THROWS_AS(parse_scheme(""), UsageError);
}

TEST_CASE("scheme weights") {
  const ScenarioConfig cfg;
  CHECK(scheme_config(cfg, Scheme::DKO).mu2 == 0.0);
  CHECK(scheme_config(cfg, Scheme::DKO).mu1 == cfg.mu1);
  CHECK(scheme_config(cfg, Scheme::ACO).mu1 == 0.0);
  CHECK(scheme_config(cfg, Scheme::ACO).mu2 == cfg.mu2);
  CHECK(scheme_config(cfg, Scheme::NDP).mu1 == 0.0);
  CHECK(scheme_config(cfg, Scheme::NDP).mu2 == 0.0);
  CHECK(scheme_config(cfg, Scheme::MDR).mu1 == cfg.mu1);
  const TargetTrack track = generate_target_track(cfg);
  const auto solar = solar_for(cfg);
  CHECK(scheme_instance(track, cfg, solar, Scheme::DST).objective == ObjectiveKind::DistanceSquared);
  CHECK(scheme_instance(track, cfg, solar, Scheme::MDR).heading_rows);
  CHECK_FALSE(scheme_instance(track, cfg, solar, Scheme::Proposed).heading_rows);
}

TEST_CASE("default proximal weight dominates the concave curvature") {
  const ScenarioConfig cfg;
  CHECK(default_proximal_weight(cfg) == doctest::Approx(19.6));
  ScenarioConfig heavy = cfg;
  heavy.mu1 = 50.0;
  CHECK(default_proximal_weight(heavy) == doctest::Approx(100.0));
}

TEST_CASE("solver option validation") {
  SolverOptions o;
  CHECK_NOTHROW(o.validate());
  o.max_iters = 0;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o = SolverOptions{};
  o.M = -1.0;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o = SolverOptions{};
  o.eps_converge = 0.0;
  CHECK_THROWS_AS(o.validate(), DomainError);
}

TEST_CASE("one outer step does not raise the surrogate objective") {
  const ScenarioConfig cfg = short_mission(20);
  const TargetTrack track = generate_target_track(cfg);
  const HorizonInstance inst = make_offline_instance(track, cfg, solar_for(cfg));
  const SolverOptions opts;
  const IterateState s0 = start_state(initial_plan(track, cfg), inst, opts);
  CHECK(s0.M == doctest::Approx(default_proximal_weight(cfg)));
  const double before = surrogate_objective(s0.current, inst);
  const IterateState s1 = pdcae_iterate(s0, inst, opts);
  CHECK(surrogate_objective(s1.current, inst) <= before + 1e-9 * (1.0 + std::abs(before)));
  CHECK(s1.log.size() == s0.log.size() + 1);
}

TEST_CASE("objective trace is monotone and the plan passes the audit") {
  const ScenarioConfig cfg = short_mission(30);
  const TargetTrack track = generate_target_track(cfg);
  SolverOptions opts;
  const RunReport r = solve_offline(track, cfg, opts);
  REQUIRE_FALSE(r.iterations.empty());
  CHECK(r.converged);
  CHECK(r.iterations.size() <= static_cast<std::size_t>(opts.max_iters));
  double prev = INFINITY;
  for (const auto& it : r.iterations) {
    if (!it.accepted) continue;
    CHECK(it.surrogate_objective <= prev + 1e-9 * (1.0 + std::abs(prev)));
    prev = it.surrogate_objective;
  }
  CHECK(r.audit.ok);
  CHECK(r.audit.max_q_residual <= 1e-4);
  CHECK(r.M_final <= r.M_initial);
  CHECK(r.M_final >= opts.m_floor);
  // The solve improves on the shadow start.
  const HorizonInstance inst = make_offline_instance(track, cfg, solar_for(cfg));
  CHECK(r.objective_exact < exact_objective(initial_plan(track, cfg), inst));
}

TEST_CASE("a fixed proximal weight also yields a monotone trace") {
  const ScenarioConfig cfg = short_mission(15);
  const TargetTrack track = generate_target_track(cfg);
  SolverOptions opts;
  opts.adaptive_M = false;
  opts.M = 40.0;
  opts.max_iters = 25;
  const RunReport r = solve_offline(track, cfg, opts);
  double prev = INFINITY;
  for (const auto& it : r.iterations) {
    CHECK(it.M == 40.0);
    if (!it.accepted) continue;
    CHECK(it.surrogate_objective <= prev + 1e-9 * (1.0 + std::abs(prev)));
    prev = it.surrogate_objective;
  }
  CHECK(r.audit.ok);
}

TEST_CASE("extrapolation from a repeated iterate is the identity") {
  Eigen::VectorXd a(3);
  a << 1.0, -4.0, 2.5;
  CHECK(extrapolate(a, a, 0.7) == a);
  Eigen::VectorXd x(1), y(1);
  x << 2.0;
  y << 0.0;
  CHECK(extrapolate(x, y, 0.5)[0] == 3.0);
  CHECK(extrapolate(x, y, 0.0)[0] == 2.0);
}

TEST_CASE("first outer step on the reference mission strictly improves") {
  const ScenarioConfig cfg;
  const TargetTrack track = generate_target_track(cfg);
  const HorizonInstance inst = make_offline_instance(track, cfg, solar_for(cfg));
  const SolverOptions opts;
  const IterateState s0 = start_state(initial_plan(track, cfg), inst, opts);
  const IterateState s1 = pdcae_iterate(s0, inst, opts);
  CHECK(surrogate_objective(s1.current, inst) < surrogate_objective(s0.current, inst) - 1.0);
}

TEST_CASE("restarting at a converged plan stays put") {
  const ScenarioConfig cfg = short_mission(15);
  const TargetTrack track = generate_target_track(cfg);
  const HorizonInstance inst = make_offline_instance(track, cfg, solar_for(cfg));
  const SolverOptions opts;
  const TrajectoryPlan shadow = initial_plan(track, cfg);
  const HorizonResult first = solve_horizon(inst, shadow, opts);
  REQUIRE(first.converged);
  const HorizonResult again = solve_horizon(inst, first.plan, opts);
  const double gain = surrogate_objective(shadow, inst) - surrogate_objective(first.plan, inst);
  const double regain = surrogate_objective(first.plan, inst) - surrogate_objective(again.plan, inst);
  CHECK(regain >= -1e-9);
  CHECK(regain <= 1e-3 * gain);
  CHECK(again.iterations.size() < first.iterations.size());
}
