#include "covert_pursuit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "covert_pursuit/config_io.hpp"
#include "covert_pursuit/errors.hpp"

namespace covert {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kAuditTol = 1e-6;
constexpr double kQResidualTol = 1e-4;

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt_pos(const char* what, std::size_t t, double amount) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s at slot %zu by %.3e", what, t, amount);
  return buf;
}

FeasibilityAudit audit_plan(const TrajectoryPlan& plan, const TargetTrack& track, const ScenarioConfig& cfg,
                            const std::vector<SlotBreakdown>& slots) {
  FeasibilityAudit a;
  a.mobility = audit_mobility(plan, cfg, kAuditTol * cfg.horizontal_reach());
  for (const auto& m : a.mobility) a.violations.push_back(fmt_pos(m.constraint.c_str(), m.slot, m.magnitude));

  const double budget = cfg.energy_budget();
  double cumulative = 0.0;
  a.min_causality_margin_rel = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= plan.n_slots(); ++t) {
    const SlotBreakdown& s = slots[t];
    const TargetPoint& tgt = track[t];
    a.max_d3 = std::max(a.max_d3, s.d3);
    if (s.d3 > cfg.d_max * (1.0 + kAuditTol)) a.violations.push_back(fmt_pos("distance", t, s.d3 - cfg.d_max));
    const double w = s.position.x - tgt.a;
    if (w > kAuditTol * std::max(1.0, std::abs(tgt.a))) a.violations.push_back(fmt_pos("trailing_x", t, w));
    const double h = s.position.y - tgt.b;
    if (h > kAuditTol * std::max(1.0, std::abs(tgt.b))) a.violations.push_back(fmt_pos("trailing_y", t, h));
    const double low = cfg.z_lower - s.position.z;
    if (low > kAuditTol * cfg.z_lower) a.violations.push_back(fmt_pos("altitude_floor", t, low));

    cumulative += s.ph_exact + s.pv - s.ps_exact;
    a.min_causality_margin_rel = std::min(a.min_causality_margin_rel, (budget - cumulative) / budget);

    const double v = plan.horizontal_step(t) / cfg.delta;
    if (v > 1e-9) {
      const double q = plan.q[t - 1];
      const double r = v / cfg.propulsion.v0;
      const double res = std::abs(1.0 - q * q * q * q - r * r * q * q);
      a.max_q_residual = std::max(a.max_q_residual, res);
    }
  }
  if (plan.n_slots() == 0) a.min_causality_margin_rel = 1.0;
  if (a.min_causality_margin_rel < -kAuditTol) {
    a.violations.push_back("energy causality margin " + fmt9(a.min_causality_margin_rel) + " of the budget");
  }
  if (a.max_q_residual > kQResidualTol) a.violations.push_back("q residual " + fmt9(a.max_q_residual));
  a.ok = a.violations.empty();
  return a;
}

ojson plan_point(const Waypoint& w) { return ojson::array({w.x, w.y, w.z}); }

ojson iteration_json(const IterationRecord& r) {
  ojson j;
  j["iter"] = r.iter;
  j["surrogate_objective"] = r.surrogate_objective;
  j["exact_objective"] = r.exact_objective;
  j["step_norm"] = r.step_norm;
  j["beta"] = r.beta;
  j["inner_iters"] = r.inner_iters;
  j["M"] = r.M;
  j["kkt_residual"] = r.kkt_residual;
  j["accepted"] = r.accepted;
  j["momentum_restarted"] = r.momentum_restarted;
  return j;
}

std::string output_path(const std::string& dir, const std::string& stem, const char* name) {
  return (std::filesystem::path(dir) / (stem.empty() ? std::string(name) : stem + "_" + name)).string();
}

}  // namespace

RunReport make_report(const std::string& scheme, const ScenarioConfig& run_cfg, const ScenarioConfig& common,
                      const SolverOptions& opts, const SolarLinearApprox& solar, const TargetTrack& track,
                      const TrajectoryPlan& plan, std::vector<IterationRecord> iterations, bool converged) {
  const ScenarioConfig& cfg = run_cfg;
  if (plan.waypoints.size() != cfg.n_slots + 1 || plan.q.size() != cfg.n_slots) {
    throw DomainError("plan length does not match n_slots");
  }
  if (track.size() != cfg.n_slots + 1) throw DomainError("track length does not match n_slots");

  RunReport r;
  r.scheme = scheme;
  r.config = run_cfg;
  r.options = opts;
  r.solar = solar;
  r.track = track;
  r.plan = plan;
  r.iterations = std::move(iterations);
  r.converged = converged;
  r.status = converged ? "converged" : "max_iters";
  r.common_mu1 = common.mu1;
  r.common_mu2 = common.mu2;
  r.M_initial = opts.M.value_or(default_proximal_weight(cfg));
  r.M_final = r.iterations.empty() ? r.M_initial : r.iterations.back().M;

  const double W = cfg.thrust.weight_force();
  r.slots.resize(cfg.n_slots + 1);
  r.slots[0].position = plan.waypoints[0];
  r.slots[0].d2 = horizontal_distance(plan.waypoints[0], track[0]);
  r.slots[0].d3 = distance_3d(plan.waypoints[0], track[0], cfg.target_alt_H);
  double common_f = 0.0;
  for (std::size_t t = 1; t <= cfg.n_slots; ++t) {
    SlotBreakdown& s = r.slots[t];
    s.t = t;
    s.position = plan.waypoints[t];
    s.q = plan.q[t - 1];
    s.ph_exact = propulsion_power_exact(plan.horizontal_step(t) / cfg.delta, cfg.propulsion);
    s.dz = plan.vertical_step(t);
    s.pv = W * s.dz / cfg.delta;
    s.ps_exact = solar_power_exact(s.position.z, cfg.solar);
    s.ps_linear = solar(s.position.z);
    s.d2 = horizontal_distance(s.position, track[t]);
    s.d3 = distance_3d(s.position, track[t], cfg.target_alt_H);
    s.f = cfg.mu1 * s.d2 * s.d2 + cfg.mu2 * s.dz * s.dz;
    const double fc = common.mu1 * s.d2 * s.d2 + common.mu2 * s.dz * s.dz;

    r.energy.propulsion_J += s.ph_exact * cfg.delta;
    r.energy.thrust_J += s.pv * cfg.delta;
    r.energy.harvested_J += s.ps_exact * cfg.delta;
    r.energy.harvested_linear_J += s.ps_linear * cfg.delta;
    r.objective_exact += s.ph_exact + s.pv - s.f;
    common_f += fc;
    r.common_objective += (s.ph_exact + s.pv - fc) * cfg.delta;
  }
  r.energy.consumed_J = r.energy.propulsion_J + r.energy.thrust_J;
  r.energy.average_power_W = cfg.n_slots ? r.energy.consumed_J / (cfg.delta * cfg.n_slots) : 0.0;
  r.objective_exact_scaled = r.objective_exact * cfg.delta;
  r.disguise_total = common_f;
  r.audit = audit_plan(plan, track, cfg, r.slots);
  return r;
}

std::string report_json(const RunReport& r) {
  ojson j;
  j["scheme"] = r.scheme;
  j["status"] = r.status;
  j["converged"] = r.converged;
  if (!r.config_json.empty()) {
    j["config"] = ojson::parse(r.config_json);
  } else {
    RunConfig rc;
    rc.scenario = r.config;
    rc.solver = r.options;
    rc.online.solver = r.options;
    j["config"] = ojson::parse(to_json(rc));
  }
  j["effective_weights"] = ojson{{"mu1", r.config.mu1}, {"mu2", r.config.mu2}};
  j["proximal_weight"] = ojson{{"initial", r.M_initial}, {"final", r.M_final}};
  j["solar_fit"] = ojson{{"c1", r.solar.c1},
                         {"c2", r.solar.c2},
                         {"z_band", ojson::array({r.solar.z_band[0], r.solar.z_band[1]})},
                         {"max_excess", r.solar.max_excess},
                         {"max_relative_gap", r.solar.max_relative_gap},
                         {"source", r.solar.source}};

  ojson obj;
  obj["exact_W"] = r.objective_exact;
  obj["exact_J"] = r.objective_exact_scaled;
  obj["common_mu1"] = r.common_mu1;
  obj["common_mu2"] = r.common_mu2;
  obj["common_J"] = r.common_objective;
  obj["disguise_total"] = r.disguise_total;
  j["objective"] = obj;

  ojson e;
  e["consumed_J"] = r.energy.consumed_J;
  e["propulsion_J"] = r.energy.propulsion_J;
  e["thrust_J"] = r.energy.thrust_J;
  e["harvested_J"] = r.energy.harvested_J;
  e["harvested_linear_J"] = r.energy.harvested_linear_J;
  e["average_power_W"] = r.energy.average_power_W;
  if (r.energy.saved_vs_baseline_J) {
    e["saved_vs_baseline_J"] = *r.energy.saved_vs_baseline_J;
    e["baseline"] = r.energy.baseline;
  }
  j["energy"] = e;

  ojson a;
  a["ok"] = r.audit.ok;
  a["violations"] = r.audit.violations;
  a["max_d3"] = r.audit.max_d3;
  a["min_causality_margin_rel"] = r.audit.min_causality_margin_rel;
  a["max_q_residual"] = r.audit.max_q_residual;
  j["audit"] = a;

  ojson iters = ojson::array();
  for (const auto& rec : r.iterations) iters.push_back(iteration_json(rec));
  j["iterations"] = iters;

  ojson slots = ojson::array();
  for (const auto& s : r.slots) {
    ojson so;
    so["t"] = s.t;
    so["position"] = plan_point(s.position);
    so["q"] = s.q;
    so["Ph_exact"] = s.ph_exact;
    so["Pv"] = s.pv;
    so["Ps_exact"] = s.ps_exact;
    so["Ps_linear"] = s.ps_linear;
    so["f"] = s.f;
    so["d2"] = s.d2;
    so["d3"] = s.d3;
    so["dz"] = s.dz;
    slots.push_back(so);
  }
  j["slots"] = slots;

  if (!r.ticks.empty()) {
    ojson on;
    on["first_ffr_loss_tick"] = r.first_ffr_loss_tick ? ojson(*r.first_ffr_loss_tick) : ojson(nullptr);
    on["fallback_ticks"] = r.fallback_ticks;
    on["prediction_rms"] = r.prediction_rms ? ojson(*r.prediction_rms) : ojson(nullptr);
    ojson ticks = ojson::array();
    for (const auto& t : r.ticks) {
      ticks.push_back(ojson{{"tau", t.tau},
                            {"position", plan_point(t.position)},
                            {"predicted_err", t.predicted_err},
                            {"energy_consumed", t.energy_consumed},
                            {"energy_harvested", t.energy_harvested},
                            {"reserve", t.reserve},
                            {"ffr_ok", t.ffr_ok},
                            {"mode", t.mode},
                            {"outer_iterations", t.outer_iterations}});
    }
    on["ticks"] = ticks;
    j["online"] = on;
  }
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const RunReport& r) {
  std::ostringstream os;
  os << "t,x,y,z,q,Ph_exact,Pv,Ps_exact,Ps_linear,f,d2,d3\n";
  for (const auto& s : r.slots) {
    os << s.t << ',' << fmt9(s.position.x) << ',' << fmt9(s.position.y) << ',' << fmt9(s.position.z) << ','
       << fmt9(s.q) << ',' << fmt9(s.ph_exact) << ',' << fmt9(s.pv) << ',' << fmt9(s.ps_exact) << ','
       << fmt9(s.ps_linear) << ',' << fmt9(s.f) << ',' << fmt9(s.d2) << ',' << fmt9(s.d3) << '\n';
  }
  return os.str();
}

std::string iterations_csv(const RunReport& r) {
  std::ostringstream os;
  os << "iter,surrogate_objective,exact_objective,step_norm,beta,inner_iters,M,kkt_residual,accepted,"
        "momentum_restarted\n";
  for (const auto& it : r.iterations) {
    os << it.iter << ',' << fmt9(it.surrogate_objective) << ',' << fmt9(it.exact_objective) << ','
       << fmt9(it.step_norm) << ',' << fmt9(it.beta) << ',' << it.inner_iters << ',' << fmt9(it.M) << ','
       << fmt9(it.kkt_residual) << ',' << (it.accepted ? 1 : 0) << ',' << (it.momentum_restarted ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string ticks_csv(const RunReport& r) {
  std::ostringstream os;
  os << "tau,x,y,z,predicted_err,energy_consumed,energy_harvested,reserve,ffr_ok,mode,outer_iterations\n";
  for (const auto& t : r.ticks) {
    os << t.tau << ',' << fmt9(t.position.x) << ',' << fmt9(t.position.y) << ',' << fmt9(t.position.z) << ','
       << fmt9(t.predicted_err) << ',' << fmt9(t.energy_consumed) << ',' << fmt9(t.energy_harvested) << ','
       << fmt9(t.reserve) << ',' << (t.ffr_ok ? 1 : 0) << ',' << t.mode << ',' << t.outer_iterations << '\n';
  }
  return os.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void write_report_files(const std::string& dir, const std::string& stem, const RunReport& report) {
  std::filesystem::create_directories(dir);
  atomic_write(output_path(dir, stem, "report.json"), report_json(report));
  atomic_write(output_path(dir, stem, "trajectory.csv"), trajectory_csv(report));
  atomic_write(output_path(dir, stem, "iterations.csv"), iterations_csv(report));
  if (!report.ticks.empty()) atomic_write(output_path(dir, stem, "ticks.csv"), ticks_csv(report));
}

}  // namespace covert
