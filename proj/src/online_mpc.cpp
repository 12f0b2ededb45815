#include "covert_pursuit/online_mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "covert_pursuit/errors.hpp"

namespace covert {

std::string to_string(PredictorMode m) {
  switch (m) {
    case PredictorMode::ConstantVelocity: return "constant_velocity";
    case PredictorMode::Oracle: return "oracle";
  }
  return "unknown";
}

PredictorMode parse_predictor(const std::string& name) {
  if (name == "constant_velocity") return PredictorMode::ConstantVelocity;
  if (name == "oracle") return PredictorMode::Oracle;
  throw UsageError("unknown predictor '" + name + "' (expected constant_velocity or oracle)");
}

std::vector<TargetPoint> predict_target(const std::vector<TargetPoint>& history, std::size_t n,
                                        const TargetPredictor& predictor) {
  if (history.empty()) throw DomainError("prediction needs at least one observation");
  std::vector<TargetPoint> out(n);
  if (predictor.mode == PredictorMode::Oracle) {
    if (!predictor.truth || predictor.truth->size() == 0) {
      throw DomainError("oracle predictor needs the ground-truth track");
    }
    const TargetTrack& truth = *predictor.truth;
    const std::size_t base = history.size() - 1;
    for (std::size_t k = 0; k < n; ++k) out[k] = truth[std::min(base + k + 1, truth.size() - 1)];
    return out;
  }
  if (history.size() < 2) throw DomainError("constant-velocity prediction needs two observations");
  const std::size_t w = std::clamp<std::size_t>(predictor.history_window, 2, history.size());
  const TargetPoint& first = history[history.size() - w];
  const TargetPoint& last = history.back();
  const double va = (last.a - first.a) / static_cast<double>(w - 1);
  const double vb = (last.b - first.b) / static_cast<double>(w - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k + 1);
    out[k] = {last.a + s * va, last.b + s * vb};
  }
  return out;
}

void OnlineOptions::validate() const {
  if (horizon < 1) throw DomainError("online horizon must be at least one slot");
  if (history_window < 2) throw DomainError("history_window must be at least 2");
  if (!(margin_gain >= 0.0)) throw DomainError("margin_gain must be nonnegative");
  if (!(margin_cap_fraction >= 0.0 && margin_cap_fraction < 1.0)) {
    throw DomainError("margin_cap_fraction must lie in [0, 1)");
  }
  if (!(soft_ffr_weight > 0.0)) throw DomainError("soft_ffr_weight must be positive");
  solver.validate();
}

double energy_carry(const MpcState& state, const ScenarioConfig& cfg) {
  const TrajectoryPlan& ex = state.executed;
  const double W = cfg.thrust.weight_force();
  double carry = 0.0;
  for (std::size_t t = 1; t < ex.waypoints.size(); ++t) {
    carry += propulsion_power_exact(ex.horizontal_step(t) / cfg.delta, cfg.propulsion) +
             W * ex.vertical_step(t) / cfg.delta - solar_power_exact(ex.waypoints[t].z, cfg.solar);
  }
  return carry;
}

namespace {

double norm2(const TargetPoint& p) { return std::hypot(p.a, p.b); }

/// Inward shrink per window slot that absorbs the growth of constant-velocity errors.
std::vector<double> prediction_margins(const std::vector<TargetPoint>& history, std::size_t n,
                                       const ScenarioConfig& cfg, const OnlineOptions& opts) {
  if (opts.predictor == PredictorMode::Oracle) return {};
  const std::size_t m = history.size();
  double rate = 0.0;
  if (m >= 3) {
    const TargetPoint& p1 = history[m - 1];
    const TargetPoint& p2 = history[m - 2];
    const TargetPoint& p3 = history[m - 3];
    rate += norm2({p1.a - 2.0 * p2.a + p3.a, p1.b - 2.0 * p2.b + p3.b});
    if (m >= 4) {
      const TargetPoint& p4 = history[m - 4];
      rate += norm2({p1.a - 3.0 * p2.a + 3.0 * p3.a - p4.a, p1.b - 3.0 * p2.b + 3.0 * p3.b - p4.b});
    }
  }
  const double cap = opts.margin_cap_fraction * (cfg.d_max - (cfg.z_lower - cfg.target_alt_H));
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double growth = 0.5 * static_cast<double>((k + 1) * (k + 2));
    out[k] = std::min(cap, opts.margin_gain * rate * growth) + 1e-3;
  }
  return out;
}

TrajectoryPlan shadow_window(const Waypoint& anchor, const HorizonInstance& inst) {
  TrajectoryPlan p;
  p.waypoints.resize(inst.n() + 1);
  p.q.resize(inst.n());
  p.waypoints[0] = anchor;
  for (std::size_t k = 0; k < inst.n(); ++k) {
    const double m = inst.margin(k);
    p.waypoints[k + 1] = {inst.target[k].a - m, inst.target[k].b - m, anchor.z};
  }
  tighten_q(p, inst.cfg);
  return p;
}

/// Previous window plan advanced by one slot; the new last waypoint follows the target's predicted step.
TrajectoryPlan shifted_window(const TrajectoryPlan& last, const HorizonInstance& inst) {
  const std::size_t n = inst.n();
  TrajectoryPlan p;
  p.waypoints.resize(n + 1);
  p.q.resize(n);
  p.waypoints[0] = inst.anchor;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k + 1 < last.waypoints.size()) {
      p.waypoints[k] = last.waypoints[k + 1];
    } else {
      const TargetPoint& cur = inst.target[k - 1];
      const TargetPoint& prev = k >= 2 ? inst.target[k - 2] : inst.target_anchor;
      const Waypoint& w = p.waypoints[k - 1];
      p.waypoints[k] = {w.x + cur.a - prev.a, w.y + cur.b - prev.b, w.z};
    }
  }
  tighten_q(p, inst.cfg);
  return p;
}

}  // namespace

HorizonInstance horizon_instance(const MpcState& state, const std::vector<TargetPoint>& predictions,
                                 const ScenarioConfig& cfg, const SolarLinearApprox& solar,
                                 const OnlineOptions& opts) {
  if (predictions.empty()) throw DomainError("planning window is empty");
  if (state.executed.waypoints.size() != state.tau + 1 || state.target_history.empty()) {
    throw DomainError("MPC state is inconsistent with its tick");
  }
  HorizonInstance inst;
  inst.cfg = cfg;
  inst.solar = solar;
  inst.anchor = state.executed.waypoints[state.tau];
  if (state.tau >= 1) inst.z_before_anchor = state.executed.waypoints[state.tau - 1].z;
  inst.target_anchor = state.target_history.back();
  inst.target = predictions;
  inst.ffr_margin = prediction_margins(state.target_history, predictions.size(), cfg, opts);
  inst.energy_carry = energy_carry(state, cfg);
  inst.heading_rows = opts.heading_rows;
  inst.soft_ffr_weight = opts.soft_ffr_weight;
  return inst;
}

HorizonPlan plan_horizon(const MpcState& state, const std::vector<TargetPoint>& predictions,
                         const ScenarioConfig& cfg, const SolarLinearApprox& solar, const OnlineOptions& opts) {
  HorizonInstance inst = horizon_instance(state, predictions, cfg, solar, opts);
  const bool have_last = state.tau >= 1 && state.last_plan.n_slots() >= 1;
  const TrajectoryPlan init = have_last ? shifted_window(state.last_plan, inst) : shadow_window(inst.anchor, inst);

  HorizonPlan out;
  auto attempt = [&](const std::string& mode) {
    const HorizonResult res = solve_horizon(inst, init, opts.solver);
    out.plan = res.plan;
    out.mode = mode;
    out.converged = res.converged;
    out.outer_iterations = static_cast<int>(res.iterations.size());
  };

  if (!in_ffr(inst.anchor, state.target_history.back(), cfg)) {
    // Target lost: chase it back with the flight region as a penalty.
    inst.soft_ffr = true;
    attempt("pursuit");
    return out;
  }
  try {
    attempt("nominal");
    return out;
  } catch (const InfeasibleError&) {
  } catch (const SolverError&) {
  }
  inst.soft_ffr = true;
  try {
    attempt("soft_ffr");
    return out;
  } catch (const InfeasibleError&) {
    if (!have_last) throw;
  } catch (const SolverError&) {
    if (!have_last) throw;
  }
  out.plan = shifted_window(state.last_plan, inst);
  out.mode = "shifted";
  out.converged = false;
  out.outer_iterations = 0;
  return out;
}

RunReport run_online(const TargetTrack& track, const ScenarioConfig& cfg, const OnlineOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  opts.validate();
  validate_track(track, cfg);
  const SolarLinearApprox solar = solar_for(cfg);
  TargetPredictor predictor{opts.predictor, opts.history_window, std::nullopt};
  if (opts.predictor == PredictorMode::Oracle) predictor.truth = track;

  const std::size_t N = cfg.n_slots;
  const double W = cfg.thrust.weight_force();
  MpcState state;
  state.executed.waypoints.push_back({0.0, 0.0, cfg.monitor_z0});
  state.reserve_J = cfg.e0;
  state.target_history.push_back(track[0]);

  std::vector<TickRecord> ticks;
  std::optional<std::size_t> first_loss;
  std::size_t fallbacks = 0;
  bool all_converged = true;
  double err_sq = 0.0;
  for (std::size_t tau = 0; tau < N; ++tau) {
    const std::size_t n = std::min(opts.horizon, N - tau);
    std::vector<TargetPoint> hist = state.target_history;
    // Before the first move the target is assumed to hover.
    if (hist.size() < 2 && opts.predictor == PredictorMode::ConstantVelocity) hist.insert(hist.begin(), hist.front());
    const std::vector<TargetPoint> preds = predict_target(hist, n, predictor);
    HorizonPlan hp = plan_horizon(state, preds, cfg, solar, opts);

    const Waypoint next = hp.plan.waypoints[1];
    state.executed.waypoints.push_back(next);
    const std::size_t t = tau + 1;
    const double v = state.executed.horizontal_step(t) / cfg.delta;
    state.executed.q.push_back(solve_q_exact(v, cfg.propulsion.v0));
    const double consumed = (propulsion_power_exact(v, cfg.propulsion) + W * state.executed.vertical_step(t) / cfg.delta) * cfg.delta;
    const double harvested = solar_power_exact(next.z, cfg.solar) * cfg.delta;
    state.consumed_J += consumed;
    state.harvested_J += harvested;
    state.reserve_J = cfg.e0 - state.consumed_J + state.harvested_J;
    state.tau = t;
    state.target_history.push_back(track[t]);
    state.last_plan = std::move(hp.plan);

    TickRecord rec;
    rec.tau = t;
    rec.position = next;
    rec.predicted_err = std::hypot(preds[0].a - track[t].a, preds[0].b - track[t].b);
    rec.energy_consumed = state.consumed_J;
    rec.energy_harvested = state.harvested_J;
    rec.reserve = state.reserve_J;
    rec.ffr_ok = in_ffr(next, track[t], cfg);
    rec.mode = hp.mode;
    rec.outer_iterations = hp.outer_iterations;
    if (!rec.ffr_ok && !first_loss) first_loss = t;
    if (hp.mode != "nominal") ++fallbacks;
    all_converged = all_converged && hp.converged;
    err_sq += rec.predicted_err * rec.predicted_err;
    ticks.push_back(rec);
  }

  SolverOptions reported = opts.solver;
  reported.scheme = Scheme::Proposed;
  RunReport report = make_report("online", cfg, cfg, reported, solar, track, state.executed, {}, all_converged);
  report.ticks = std::move(ticks);
  report.first_ffr_loss_tick = first_loss;
  report.fallback_ticks = fallbacks;
  report.prediction_rms = N ? std::sqrt(err_sq / static_cast<double>(N)) : 0.0;
  if (first_loss) report.status = "ffr_lost";
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double prediction_rms(const TargetTrack& track, const TargetPredictor& predictor) {
  if (track.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < track.size(); ++t) {
    std::vector<TargetPoint> hist(track.waypoints.begin(), track.waypoints.begin() + static_cast<long>(t + 1));
    if (hist.size() < 2 && predictor.mode == PredictorMode::ConstantVelocity) hist.insert(hist.begin(), hist.front());
    const TargetPoint p = predict_target(hist, 1, predictor)[0];
    sum += std::pow(p.a - track[t + 1].a, 2) + std::pow(p.b - track[t + 1].b, 2);
  }
  return std::sqrt(sum / static_cast<double>(track.size() - 1));
}

}  // namespace covert
