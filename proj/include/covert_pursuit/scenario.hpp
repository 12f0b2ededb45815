#pragma once

// Scenario description, target tracks, trajectory plans and the feasibility
// predicates shared by the solvers, the audits and the oracle.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "covert_pursuit/power_models.hpp"

namespace covert {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Horizontal target position; the target flies at the fixed altitude ScenarioConfig::target_alt_H.
struct TargetPoint {
  double a = 0.0;
  double b = 0.0;
};

/// How the linear solar bound is obtained.
struct SolarFitSettings {
  /// Altitude band of the fit; empty optional means [z_lower, z_lower + 100].
  std::optional<std::array<double, 2>> z_band;
  int n_samples = 1001;
  /// Fixed (c1, c2); bypasses the fit and only records the lower-bound audit.
  std::optional<std::array<double, 2>> coefficients;
};

struct ScenarioConfig {
  double horizon_T = 30.0;
  double delta = 0.2;
  std::size_t n_slots = 150;
  double v_hm = 30.0;
  double v_vm = 8.0;
  double target_alt_H = 100.0;
  double monitor_z0 = 102.0;
  double z_lower = 101.0;
  double d_max = 20.0;
  double mu1 = 0.2;
  double mu2 = 0.1;
  double e0 = 50000.0;
  double eta0 = 0.9;
  double c3 = 1.0;
  /// Sanity bound on the target's per-slot displacement (m/s).
  double target_v_max = 30.0;
  PropulsionParams propulsion;
  ThrustParams thrust;
  SolarParams solar;
  SolarFitSettings solar_fit;

  double horizontal_reach() const { return v_hm * delta; }
  double vertical_reach() const { return v_vm * delta; }
  /// Usable battery energy expressed in slot-power units (W): eta0 * E0 / delta.
  double energy_budget() const { return eta0 * e0 / delta; }

  /// Throws DomainError when an invariant does not hold.
  void validate() const;
};

struct TargetTrack {
  /// Indexed by slot t = 0..N.
  std::vector<TargetPoint> waypoints;

  std::size_t size() const { return waypoints.size(); }
  const TargetPoint& operator[](std::size_t t) const { return waypoints[t]; }
};

/// Monitor trajectory: waypoints for t = 0..N (entry 0 is the fixed start) and the
/// propulsion slack q for t = 1..N (stored at index t - 1).
struct TrajectoryPlan {
  std::vector<Waypoint> waypoints;
  std::vector<double> q;

  std::size_t n_slots() const { return q.size(); }
  double horizontal_step(std::size_t t) const;
  double vertical_step(std::size_t t) const;
};

struct MobilityViolation {
  std::size_t slot = 0;
  std::string constraint;  // "horizontal_speed", "vertical_speed", "vertical_accel"
  double magnitude = 0.0;  // amount by which the bound is exceeded (m)
};

/// Reference track a = 10 t, b = 100 sin(t / 5) with t the elapsed time t_slot * delta.
TargetTrack generate_target_track(const ScenarioConfig& cfg);

/// CSV with header `t,a,b`. Throws ParseError naming the offending line or slot.
TargetTrack load_target_track(const std::string& path,
                              std::optional<std::size_t> expected_points = std::nullopt);
void save_target_track(const std::string& path, const TargetTrack& track);

/// Throws DomainError when the track length mismatches cfg or a step exceeds target_v_max.
void validate_track(const TargetTrack& track, const ScenarioConfig& cfg);

double horizontal_distance(const Waypoint& m, const TargetPoint& tgt);
double distance_3d(const Waypoint& m, const TargetPoint& tgt, double target_alt);

/// Feasible flight region membership, inclusive on every bound.
bool in_ffr(const Waypoint& monitor, const TargetPoint& target, const ScenarioConfig& cfg);

/// Slot-wise speed and altitude-rate checks; `tol` absorbs rounding (m).
std::vector<MobilityViolation> audit_mobility(const TrajectoryPlan& plan, const ScenarioConfig& cfg,
                                              double tol = 1e-9);

/// f_t = mu1 d_t^2 + mu2 (z_t - z_{t-1})^2 for t = 1..N (index t - 1).
std::vector<double> disguise_metric(const TrajectoryPlan& plan, const TargetTrack& track,
                                    double mu1, double mu2);
inline std::vector<double> disguise_metric(const TrajectoryPlan& plan, const TargetTrack& track,
                                           const ScenarioConfig& cfg) {
  return disguise_metric(plan, track, cfg.mu1, cfg.mu2);
}

/// Monitor shadows the target horizontally at altitude z0, q from the implied speed.
/// Throws InfeasibleError when that plan violates mobility or the flight region.
TrajectoryPlan initial_plan(const TargetTrack& track, const ScenarioConfig& cfg);

/// Tightens every q_t to solve_q_exact of the plan's own speed.
void tighten_q(TrajectoryPlan& plan, const ScenarioConfig& cfg);

}  // namespace covert
