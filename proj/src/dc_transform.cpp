#include "covert_pursuit/dc_transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "covert_pursuit/errors.hpp"
#include "terms.hpp"

namespace covert {

using detail::kQ;
using detail::kX;
using detail::kY;
using detail::kZ;
using detail::var;

SolarLinearApprox solar_for(const ScenarioConfig& cfg) {
  const auto band = cfg.solar_fit.z_band.value_or(std::array<double, 2>{cfg.z_lower, cfg.z_lower + 100.0});
  if (cfg.solar_fit.coefficients) {
    const auto& c = *cfg.solar_fit.coefficients;
    return solar_override(cfg.solar, c[0], c[1], band);
  }
  return fit_solar_linear(cfg.solar, band, cfg.solar_fit.n_samples);
}

HorizonInstance make_offline_instance(const TargetTrack& track, const ScenarioConfig& cfg,
                                      const SolarLinearApprox& solar) {
  validate_track(track, cfg);
  HorizonInstance inst;
  inst.cfg = cfg;
  inst.solar = solar;
  inst.anchor = {0.0, 0.0, cfg.monitor_z0};
  inst.target_anchor = track[0];
  inst.target.assign(track.waypoints.begin() + 1, track.waypoints.end());
  return inst;
}

SCAExpansion expand_q_constraint(const TrajectoryPlan& iterate, std::size_t t, const ScenarioConfig& cfg) {
  if (t == 0 || t > iterate.n_slots()) throw DomainError("slot index out of range");
  const double q_ref = iterate.q[t - 1];
  if (!(q_ref > 0.0)) throw DomainError("q must be strictly positive at the expansion point");
  const double v0hat2 = cfg.propulsion.v0 * cfg.propulsion.v0 * cfg.delta * cfg.delta;
  const double dx = iterate.waypoints[t].x - iterate.waypoints[t - 1].x;
  const double dy = iterate.waypoints[t].y - iterate.waypoints[t - 1].y;
  SCAExpansion e;
  e.coef_q = 2.0 * q_ref;
  e.coef_dx = 2.0 * dx / v0hat2;
  e.coef_dy = 2.0 * dy / v0hat2;
  e.constant = -q_ref * q_ref - (dx * dx + dy * dy) / v0hat2;
  return e;
}

SurrogateCoefficients SurrogateCoefficients::from(const PropulsionParams& p, double delta) {
  SurrogateCoefficients c;
  c.p0 = p.p0;
  c.quad = 3.0 * p.p0 / (p.u_tip * p.u_tip * delta * delta);
  c.p1 = p.p1;
  c.cubic = p.d_f * p.rho * p.s * p.a_disc / (2.0 * delta * delta * delta);
  return c;
}

double surrogate_propulsion(double dx, double dy, double q, const PropulsionParams& p, double delta) {
  if (!(delta > 0.0)) throw DomainError("slot length must be strictly positive");
  const auto c = SurrogateCoefficients::from(p, delta);
  const double r2 = dx * dx + dy * dy;
  return c.p0 + c.quad * r2 + c.p1 * q + c.cubic * r2 * std::sqrt(r2);
}

namespace {

double slot_surrogate(const TrajectoryPlan& plan, std::size_t t, const ScenarioConfig& cfg) {
  const Waypoint& a = plan.waypoints[t];
  const Waypoint& b = plan.waypoints[t - 1];
  return surrogate_propulsion(a.x - b.x, a.y - b.y, plan.q[t - 1], cfg.propulsion, cfg.delta);
}

}  // namespace

std::vector<double> energy_causality_rows(const TrajectoryPlan& plan, const SolarLinearApprox& approx,
                                          const ScenarioConfig& cfg, double energy_carry) {
  std::vector<double> margins(plan.n_slots());
  double harvested = 0.0;
  double consumed = 0.0;
  for (std::size_t t = 1; t <= plan.n_slots(); ++t) {
    harvested += approx(plan.waypoints[t].z);
    consumed += slot_surrogate(plan, t, cfg) +
                thrust_power(plan.waypoints[t].z, plan.waypoints[t - 1].z, cfg.thrust, cfg.delta);
    margins[t - 1] = harvested + cfg.energy_budget() - energy_carry - consumed;
  }
  return margins;
}

Eigen::VectorXd gradient_f(const TrajectoryPlan& plan, const std::vector<TargetPoint>& target,
                           double mu1, double mu2) {
  const std::size_t n = plan.n_slots();
  if (target.size() < n) throw DomainError("target shorter than plan");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * n));
  for (std::size_t k = 0; k < n; ++k) {
    const Waypoint& w = plan.waypoints[k + 1];
    g[var(k, kX)] += 2.0 * mu1 * (w.x - target[k].a);
    g[var(k, kY)] += 2.0 * mu1 * (w.y - target[k].b);
    const double dz = w.z - plan.waypoints[k].z;
    g[var(k, kZ)] += 2.0 * mu2 * dz;
    if (k > 0) g[var(k - 1, kZ)] -= 2.0 * mu2 * dz;
  }
  return g;
}

Eigen::VectorXd gradient_f(const TrajectoryPlan& plan, const TargetTrack& track, double mu1, double mu2) {
  std::vector<TargetPoint> target(track.waypoints.begin() + 1, track.waypoints.end());
  return gradient_f(plan, target, mu1, mu2);
}

Eigen::VectorXd gradient_pv(std::size_t n_slots, const ScenarioConfig& cfg) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * n_slots));
  const double w = cfg.thrust.weight_force() / cfg.delta;
  for (std::size_t k = 0; k < n_slots; ++k) {
    g[var(k, kZ)] += w;
    if (k > 0) g[var(k - 1, kZ)] -= w;
  }
  return g;
}

Eigen::VectorXd pack(const TrajectoryPlan& plan) {
  const std::size_t n = plan.n_slots();
  Eigen::VectorXd X(static_cast<Eigen::Index>(4 * n));
  for (std::size_t k = 0; k < n; ++k) {
    const Waypoint& w = plan.waypoints[k + 1];
    X[var(k, kX)] = w.x;
    X[var(k, kY)] = w.y;
    X[var(k, kZ)] = w.z;
    X[var(k, kQ)] = plan.q[k];
  }
  return X;
}

TrajectoryPlan unpack(const Eigen::VectorXd& X, const Waypoint& anchor) {
  const std::size_t n = static_cast<std::size_t>(X.size()) / 4;
  TrajectoryPlan plan;
  plan.waypoints.resize(n + 1);
  plan.q.resize(n);
  plan.waypoints[0] = anchor;
  for (std::size_t k = 0; k < n; ++k) {
    plan.waypoints[k + 1] = {X[var(k, kX)], X[var(k, kY)], X[var(k, kZ)]};
    plan.q[k] = X[var(k, kQ)];
  }
  return plan;
}

std::size_t ConvexSubproblem::row_count() const {
  return horizontal.size() + vertical.size() + accel.size() + ffr_distance.size() + ffr_bounds.size() +
         causality.size() + sca.size() + q_nonneg.size() + heading.size() + soft_ffr.size();
}

ConvexSubproblem assemble_subproblem(const TrajectoryPlan& iterate, const Eigen::VectorXd& lambda,
                                     const HorizonInstance& inst, double M, double q_min,
                                     double smoothing_eps) {
  const std::size_t n = inst.n();
  const ScenarioConfig& cfg = inst.cfg;
  if (!(M > 0.0)) throw DomainError("proximal weight must be strictly positive");
  if (iterate.n_slots() != n || static_cast<std::size_t>(lambda.size()) != 4 * n) {
    throw DomainError("iterate length does not match the planning window");
  }

  ConvexSubproblem sub;
  sub.n = n;
  sub.anchor = inst.anchor;
  sub.z_before_anchor = inst.z_before_anchor;
  sub.delta = cfg.delta;
  sub.proximal_center = lambda;
  sub.proximal_weight = M;
  sub.linear_cost = gradient_pv(n, cfg) - gradient_f(iterate, inst.target, cfg.mu1, cfg.mu2);
  sub.objective = inst.objective;
  sub.propulsion = SurrogateCoefficients::from(cfg.propulsion, cfg.delta);
  sub.smoothing_eps = smoothing_eps;
  sub.distance_eps = inst.distance_smoothing;
  sub.soft_ffr_weight = inst.soft_ffr ? inst.soft_ffr_weight : 0.0;
  sub.thrust_per_meter = cfg.thrust.weight_force() / cfg.delta;
  sub.solar_c1 = inst.solar.c1;
  sub.solar_c2 = inst.solar.c2;

  const double budget = cfg.energy_budget() - inst.energy_carry;
  const double min_radius = cfg.z_lower - cfg.target_alt_H;
  TrajectoryPlan expansion_point = iterate;
  for (double& q : expansion_point.q) q = std::max(q, q_min);

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = k + 1;
    const TargetPoint& tgt = inst.target[k];
    const double margin = inst.margin(k);
    sub.horizontal.push_back({k, cfg.horizontal_reach()});
    sub.vertical.push_back({k, cfg.vertical_reach()});
    if (k > 0 || inst.z_before_anchor) sub.accel.push_back({k, cfg.vertical_reach()});
    const double radius = std::max(cfg.d_max - margin, min_radius + 1e-6);
    if (inst.soft_ffr) {
      sub.soft_ffr.push_back({k, tgt.a - margin, tgt.b - margin, cfg.target_alt_H, radius});
      sub.ffr_bounds.push_back({k, kZ, cfg.z_lower, false});
    } else {
      sub.ffr_distance.push_back({k, tgt.a, tgt.b, cfg.target_alt_H, radius});
      sub.ffr_bounds.push_back({k, kX, tgt.a - margin, true});
      sub.ffr_bounds.push_back({k, kY, tgt.b - margin, true});
      sub.ffr_bounds.push_back({k, kZ, cfg.z_lower, false});
    }
    sub.causality.push_back({k, budget});
    sub.sca.push_back({k, expand_q_constraint(expansion_point, t, cfg)});
    sub.q_nonneg.push_back(k);
    if (inst.heading_rows) {
      const TargetPoint& prev = k == 0 ? inst.target_anchor : inst.target[k - 1];
      const double da = tgt.a - prev.a;
      if (!(da > 0.0)) {
        throw DomainError("heading rows need a target moving in +x; slot " + std::to_string(t) +
                          " is not x-monotone");
      }
      sub.heading.push_back({k, (tgt.b - prev.b) / da + cfg.c3});
    }
  }
  return sub;
}

ConvexSubproblem build_subproblem(const TrajectoryPlan& iterate, const Eigen::VectorXd& lambda,
                                  const HorizonInstance& inst, double M, double q_min,
                                  double smoothing_eps) {
  ConvexSubproblem sub = assemble_subproblem(iterate, lambda, inst, M, q_min, smoothing_eps);
  const Eigen::VectorXd X = pack(iterate);
  const auto slacks = constraint_slacks(sub, X);
  double worst = 0.0;
  for (double s : slacks) worst = std::min(worst, s);
  if (worst < -1e-6) {
    throw InfeasibleError("iterate violates the window constraints by " + std::to_string(-worst) +
                          "; run feasibility restoration first");
  }
  return sub;
}

std::vector<double> constraint_slacks(const ConvexSubproblem& sub, const Eigen::VectorXd& X) {
  std::vector<double> out;
  out.reserve(2 * sub.row_count());
  std::vector<double> local;
  const bool in_domain = detail::for_each_local_row(sub, X, [&](const detail::Term& t) { local.push_back(-t.val); });
  const std::size_t n_before = sub.horizontal.size() + 2 * sub.vertical.size() + 2 * sub.accel.size() +
                               sub.ffr_distance.size() + sub.ffr_bounds.size();
  const std::size_t n_local = n_before + sub.sca.size() + sub.q_nonneg.size() + 2 * sub.heading.size();
  if (!in_domain) {
    // q <= 0 somewhere: every row from the first undefined one onward reports as violated.
    local.resize(n_local, -std::numeric_limits<double>::infinity());
  }
  // Causality rows sit between the flight-region rows and the SCA rows.
  const std::size_t split = std::min(n_before, local.size());
  out.insert(out.end(), local.begin(), local.begin() + static_cast<long>(split));
  detail::FormBuilder fb(sub);
  detail::Term t;
  double cumulative = 0.0;
  std::size_t row = 0;
  for (std::size_t k = 0; k < sub.n && row < sub.causality.size(); ++k) {
    detail::propulsion_term(sub, fb, k, X, true, t);
    cumulative += t.val;
    if (sub.causality[row].k == k) {
      out.push_back(sub.causality[row].budget - cumulative);
      ++row;
    }
  }
  out.insert(out.end(), local.begin() + static_cast<long>(split), local.end());
  return out;
}

double subproblem_objective(const ConvexSubproblem& sub, const Eigen::VectorXd& X) {
  double value = sub.linear_cost.dot(X) + 0.5 * sub.proximal_weight * (X - sub.proximal_center).squaredNorm();
  detail::FormBuilder fb(sub);
  detail::Term t;
  if (sub.objective == ObjectiveKind::Surrogate) {
    for (std::size_t k = 0; k < sub.n; ++k) {
      detail::propulsion_term(sub, fb, k, X, false, t);
      value += t.val;
    }
  } else {
    double total = 0.0;
    for (std::size_t k = 0; k < sub.n; ++k) {
      const double u = fb.diff(static_cast<long>(k), kX).eval(X);
      const double v = fb.diff(static_cast<long>(k), kY).eval(X);
      total += std::sqrt(u * u + v * v + sub.distance_eps * sub.distance_eps) - sub.distance_eps;
    }
    value += total * total;
  }
  for (const auto& r : sub.soft_ffr) {
    detail::soft_ffr_term(r, sub.soft_ffr_weight, fb, X, t);
    value += t.val;
  }
  return value;
}

namespace {

double window_objective(const TrajectoryPlan& plan, const HorizonInstance& inst, bool exact) {
  const ScenarioConfig& cfg = inst.cfg;
  const std::size_t n = inst.n();
  if (plan.n_slots() != n) throw DomainError("plan length does not match the planning window");
  double value = 0.0;
  double path = 0.0;
  for (std::size_t t = 1; t <= n; ++t) {
    const Waypoint& w = plan.waypoints[t];
    const TargetPoint& tgt = inst.target[t - 1];
    const double step = plan.horizontal_step(t);
    if (exact) {
      value += propulsion_power_exact(step / cfg.delta, cfg.propulsion);
    } else if (inst.objective == ObjectiveKind::Surrogate) {
      value += slot_surrogate(plan, t, cfg);
    } else {
      const double e = inst.distance_smoothing;
      path += std::sqrt(step * step + e * e) - e;
    }
    const double dz = plan.vertical_step(t);
    value += cfg.thrust.weight_force() * dz / cfg.delta;
    const double dx = w.x - tgt.a;
    const double dy = w.y - tgt.b;
    value -= cfg.mu1 * (dx * dx + dy * dy) + cfg.mu2 * dz * dz;
    if (!exact && inst.soft_ffr) {
      const double margin = inst.margin(t - 1);
      const double radius = std::max(cfg.d_max - margin, cfg.z_lower - cfg.target_alt_H + 1e-6);
      const double ex = w.x - (tgt.a - margin);
      const double ey = w.y - (tgt.b - margin);
      const double ez = w.z - cfg.target_alt_H;
      const double excess = std::max(0.0, ex * ex + ey * ey + ez * ez - radius * radius) / (2.0 * radius);
      value += inst.soft_ffr_weight *
               (std::pow(std::max(0.0, ex), 2) + std::pow(std::max(0.0, ey), 2) + excess * excess);
    }
  }
  return value + path * path;
}

}  // namespace

double surrogate_objective(const TrajectoryPlan& plan, const HorizonInstance& inst) {
  return window_objective(plan, inst, false);
}

double exact_objective(const TrajectoryPlan& plan, const HorizonInstance& inst) {
  return window_objective(plan, inst, true);
}

}  // namespace covert
