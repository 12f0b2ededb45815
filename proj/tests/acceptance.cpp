// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "covert_pursuit/config_io.hpp"
#include "covert_pursuit/dc_transform.hpp"
#include "covert_pursuit/harness.hpp"
#include "covert_pursuit/online_mpc.hpp"
#include "covert_pursuit/oracle.hpp"
#include "covert_pursuit/pdcae_solver.hpp"
#include "covert_pursuit/power_models.hpp"
#include "covert_pursuit/report.hpp"

using namespace covert;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("criterion %2d %s: %s (%s)\n", id, v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

ScenarioConfig toy(std::size_t n) {
  ScenarioConfig cfg;
  cfg.n_slots = n;
  cfg.horizon_T = cfg.delta * static_cast<double>(n);
  cfg.v_hm = 5.0;
  cfg.v_vm = 2.5;
  return cfg;
}

TargetTrack toy_track(std::size_t n) {
  TargetTrack track;
  for (std::size_t t = 0; t <= n; ++t) track.waypoints.push_back({0.8 * t, 0.3 * t});
  return track;
}

Eigen::VectorXd central_diff(const std::function<double(const TrajectoryPlan&)>& fn, const TrajectoryPlan& p, double h) {
  Eigen::VectorXd X = pack(p);
  Eigen::VectorXd g(X.size());
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    const double keep = X[i];
    X[i] = keep + h;
    const double up = fn(unpack(X, p.waypoints[0]));
    X[i] = keep - h;
    const double down = fn(unpack(X, p.waypoints[0]));
    X[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  }
  return worst;
}

}  // namespace

int main() {
  const RunConfig config;  // reference mission, mu1 = 0.2, mu2 = 0.1
  const ScenarioConfig& cfg = config.scenario;
  const TargetTrack track = generate_target_track(cfg);

  report(1, "hover power", [&] {
    const double p = propulsion_power_exact(0.0, cfg.propulsion);
    return Verdict{p == 121.4, "P(0) = " + num(p, 15) + " W"};
  });

  report(2, "surrogate consistency", [&] {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> speed(0.0, 30.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double v = speed(rng);
      const double q = solve_q_exact(v, cfg.propulsion.v0);
      const double s = surrogate_propulsion(v * cfg.delta, 0.0, q, cfg.propulsion, cfg.delta);
      const double e = propulsion_power_exact(v, cfg.propulsion);
      worst = std::max(worst, std::abs(s - e) / e);
    }
    return Verdict{worst <= 1e-9, "max relative error " + num(worst, 3) + " over 1000 speeds"};
  });

  report(3, "gradient checks", [&] {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> hxy(-2.0, 2.0), hz(-0.5, 0.5), hq(0.3, 1.5);
    const TrajectoryPlan base = initial_plan(track, cfg);
    const Eigen::VectorXd gpv = gradient_pv(cfg.n_slots, cfg);
    const auto f_sum = [&](const TrajectoryPlan& p) {
      const auto f = disguise_metric(p, track, cfg);
      return std::accumulate(f.begin(), f.end(), 0.0);
    };
    const auto pv_sum = [&](const TrajectoryPlan& p) {
      double s = 0.0;
      for (std::size_t t = 1; t < p.waypoints.size(); ++t) {
        s += thrust_power(p.waypoints[t].z, p.waypoints[t - 1].z, cfg.thrust, cfg.delta);
      }
      return s;
    };
    double worst_f = 0.0, worst_pv = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      TrajectoryPlan p = base;
      for (std::size_t t = 1; t < p.waypoints.size(); ++t) {
        p.waypoints[t].x += hxy(rng);
        p.waypoints[t].y += hxy(rng);
        p.waypoints[t].z += hz(rng);
        p.q[t - 1] = hq(rng);
      }
      worst_f = std::max(worst_f, max_rel(gradient_f(p, track, cfg.mu1, cfg.mu2), central_diff(f_sum, p, 1e-3)));
      worst_pv = std::max(worst_pv, max_rel(gpv, central_diff(pv_sum, p, 1e-3)));
    }
    const double worst = std::max(worst_f, worst_pv);
    return Verdict{worst <= 1e-5, "max relative error f " + num(worst_f, 3) + ", P_v " + num(worst_pv, 3) +
                                      " at 100 plans"};
  });

  report(4, "SCA minorant", [&] {
    ScenarioConfig one = cfg;
    one.n_slots = 1;
    one.horizon_T = one.delta;
    const double v0hat2 = std::pow(cfg.propulsion.v0 * cfg.delta, 2);
    const double reach = cfg.horizontal_reach();
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI), rad(0.0, 1.0), qd(1e-3, 2.0);
    auto disk = [&] {
      const double r = reach * std::sqrt(rad(rng)), a = ang(rng);
      return std::pair<double, double>{r * std::cos(a), r * std::sin(a)};
    };
    double tight = 0.0, excess = -INFINITY;
    for (int e = 0; e < 100; ++e) {
      const auto [rx, ry] = disk();
      TrajectoryPlan ref;
      ref.waypoints = {{0, 0, cfg.monitor_z0}, {rx, ry, cfg.monitor_z0}};
      ref.q = {qd(rng)};
      const SCAExpansion ex = expand_q_constraint(ref, 1, one);
      const double rhs_ref = ref.q[0] * ref.q[0] + (rx * rx + ry * ry) / v0hat2;
      tight = std::max(tight, std::abs(ex(rx, ry, ref.q[0]) - rhs_ref));
      for (int s = 0; s < 1000; ++s) {
        const auto [dx, dy] = disk();
        const double q = qd(rng);
        excess = std::max(excess, ex(dx, dy, q) - (q * q + (dx * dx + dy * dy) / v0hat2));
      }
    }
    return Verdict{tight <= 1e-12 && excess <= 0.0,
                   "gap at expansion point " + num(tight, 3) + ", max excess " + num(excess, 3) +
                       " over 100 x 1000 points"};
  });

  report(5, "solar lower bound", [&] {
    const SolarLinearApprox line = solar_for(cfg);
    const double lo = cfg.z_lower, hi = cfg.z_lower + 100.0;
    double excess = -INFINITY, gap = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      const double z = lo + (hi - lo) * i / 10000.0;
      const double exact = solar_power_exact(z, cfg.solar);
      excess = std::max(excess, line(z) - exact);
      gap = std::max(gap, (exact - line(z)) / exact);
    }
    return Verdict{excess <= 0.0 && gap <= 0.01,
                   "max excess " + num(excess, 3) + " W, max relative gap " + num(gap, 3)};
  });

  // Reference-mission solve shared by criteria 6-8 and 13.
  const RunReport proposed = run_scheme(config, "proposed", track);

  report(6, "descent monotonicity", [&] {
    double worst = -INFINITY;
    for (std::size_t i = 1; i < proposed.iterations.size(); ++i) {
      worst = std::max(worst, proposed.iterations[i].surrogate_objective - proposed.iterations[i - 1].surrogate_objective);
    }
    const std::size_t n = proposed.iterations.size();
    const bool ok = proposed.converged && n <= 100 && worst <= 1e-9;
    return Verdict{ok, std::to_string(n) + " outer iterations, converged=" + (proposed.converged ? "yes" : "no") +
                           ", largest per-step change " + num(worst, 3) + ", " + num(proposed.wall_time_s, 3) + " s"};
  });

  report(7, "feasibility at convergence", [&] {
    const FeasibilityAudit& a = proposed.audit;
    std::string detail = "max d3 " + num(a.max_d3, 10) + " m, min causality margin " +
                         num(a.min_causality_margin_rel, 6) + " relative";
    if (!a.ok) detail += ", first violation: " + a.violations.front();
    return Verdict{a.ok && a.max_d3 <= cfg.d_max * (1.0 + 1e-6) && a.min_causality_margin_rel >= -1e-6, detail};
  });

  report(8, "q tightness", [&] {
    const double r = proposed.audit.max_q_residual;
    return Verdict{r <= 1e-4, "max relative residual " + num(r, 3)};
  });

  report(9, "oracle equivalence", [&] {
    bool ok = true;
    std::string detail;
    for (std::size_t n : {1u, 3u}) {
      const ScenarioConfig c = toy(n);
      const TargetTrack t = toy_track(n);
      const BruteForceResult bf = brute_force_small(t, c, 0.5);
      const RunReport r = solve_offline(t, c, SolverOptions{});
      const double band = grid_cell_band(c, 0.5);
      const double gap = r.objective_exact - bf.objective;
      ok = ok && std::abs(gap) <= band;
      if (!detail.empty()) detail += "; ";
      detail += "N=" + std::to_string(n) + " solver " + num(r.objective_exact) + " incumbent " + num(bf.objective) +
                " band " + num(band, 4);
    }
    return Verdict{ok, detail};
  });

  report(10, "scheme orderings", [&] {
    const auto outcomes = run_schemes(config, track, {"proposed", "dko", "aco", "ndp", "dst"});
    auto get = [&](const std::string& s) -> const RunReport& {
      for (const auto& o : outcomes) {
        if (o.scheme == s) {
          if (!o.report) throw std::runtime_error(s + " failed: " + o.error);
          return *o.report;
        }
      }
      throw std::runtime_error("missing " + s);
    };
    RunConfig online_cfg = config;
    online_cfg.online.predictor = PredictorMode::Oracle;
    const RunReport online = run_scheme(online_cfg, "online", track);
    const auto &P = get("proposed"), &D = get("dko"), &A = get("aco"), &N = get("ndp"), &S = get("dst");
    const double eP = P.energy.consumed_J, eN = N.energy.consumed_J, eS = S.energy.consumed_J;
    const double eO = online.energy.consumed_J;
    const bool c1 = eN <= eP;
    const bool c2 = P.common_objective <= D.common_objective &&
                    (D.common_objective <= A.common_objective || D.common_objective <= N.common_objective);
    const bool c3 = eP < eS;
    const bool c4 = eP <= eO && eO <= eS;
    return Verdict{c1 && c2 && c3 && c4,
                   "energy J: proposed " + num(eP, 7) + ", ndp " + num(eN, 7) + ", dst " + num(eS, 7) +
                       ", online " + num(eO, 7) + "; common objective J: proposed " + num(P.common_objective, 7) +
                       ", dko " + num(D.common_objective, 7) + ", aco " + num(A.common_objective, 7) + ", ndp " +
                       num(N.common_objective, 7) + "; saving vs dst " + num(eS - eP, 5) + " J"};
  });

  report(11, "online/offline equivalence", [&] {
    OnlineOptions opts = config.online;
    opts.predictor = PredictorMode::Oracle;
    opts.horizon = cfg.n_slots;
    opts.solver = config.solver;
    MpcState s;
    s.executed.waypoints.push_back({0.0, 0.0, cfg.monitor_z0});
    s.reserve_J = cfg.e0;
    s.target_history.push_back(track[0]);
    const SolarLinearApprox solar = solar_for(cfg);
    const auto preds = predict_target(s.target_history, cfg.n_slots, TargetPredictor{PredictorMode::Oracle, 2, track});
    const HorizonPlan hp = plan_horizon(s, preds, cfg, solar, opts);
    const HorizonInstance inst = make_offline_instance(track, cfg, solar);
    const double on = exact_objective(hp.plan, inst);
    const double off = exact_objective(proposed.plan, inst);
    const double rel = std::abs(on - off) / std::max(1.0, std::abs(off));
    return Verdict{rel <= 1e-6, "tick-0 objective " + num(on, 12) + " vs offline " + num(off, 12) + ", relative " +
                                    num(rel, 3) + ", mode " + hp.mode};
  });

  report(12, "Pareto saturation", [&] {
    const auto pts = pareto_sweep(config, track, pareto_grid(11));
    const double ratio = pareto_saturation_ratio(pts);
    std::size_t failed = 0;
    for (const auto& p : pts) failed += p.error.empty() ? 0 : 1;
    return Verdict{failed == 0 && ratio <= 0.05,
                   "ratio " + num(ratio, 4) + " over 11 weight pairs, " + std::to_string(failed) + " failed"};
  });

  report(13, "determinism", [&] {
    const RunReport again = run_scheme(config, "proposed", track);
    const std::string a = report_json(proposed);
    const std::string b = report_json(again);
    return Verdict{a == b, std::to_string(a.size()) + " bytes, identical=" + (a == b ? "yes" : "no")};
  });

  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
