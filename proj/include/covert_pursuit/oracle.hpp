#pragma once

// Independent reference computations: exhaustive lattice search for tiny missions and
// central finite differences.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "covert_pursuit/scenario.hpp"

namespace covert {

struct GridEstimate {
  std::vector<double> per_slot;  // candidate positions per slot (upper bound)
  double evaluations = 0.0;      // product over slots
};

struct BruteForceResult {
  double objective = 0.0;  // sum over slots of P_h + P_v - f, exact models (W)
  TrajectoryPlan plan;
  double grid_step = 0.0;
  std::uint64_t leaves = 0;  // complete feasible tuples scored
  GridEstimate estimate;
};

/// Lattice size bound for `brute_force_small`; the lattice is anchored at the start point.
GridEstimate estimate_grid(const TargetTrack& track, const ScenarioConfig& cfg, double grid_step);

/// Exhaustive search over lattice waypoints inside the flight region box, in lexicographic
/// (t, x, y, z) order; ties keep the first tuple. Mobility, flight region and exact energy
/// causality are enforced. Throws DomainError for N > 3 or a bad step, and when the
/// estimate exceeds `max_evaluations` (the message carries the estimate).
BruteForceResult brute_force_small(const TargetTrack& track, const ScenarioConfig& cfg, double grid_step,
                                   double max_evaluations = 1e8);

/// Sum over slots of exact P_h + P_v - f for a complete plan.
double plan_objective_exact(const TrajectoryPlan& plan, const TargetTrack& track, const ScenarioConfig& cfg);

/// Upper bound on the gradient norm of plan_objective_exact over the flight region.
double objective_lipschitz_bound(const ScenarioConfig& cfg);

/// One grid cell's worth of objective change: L h sqrt(3N) / 2.
double grid_cell_band(const ScenarioConfig& cfg, double grid_step);

/// Central differences (fn(x + h e_i) - fn(x - h e_i)) / 2h. Throws DomainError for h <= 0.
Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                     const Eigen::VectorXd& point, double h);

}  // namespace covert
