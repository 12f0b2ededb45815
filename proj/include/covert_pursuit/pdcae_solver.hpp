#pragma once

// Outer loop: extrapolated proximal DC iterations with one SCA re-expansion per step.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "covert_pursuit/dc_transform.hpp"
#include "covert_pursuit/subproblem_solver.hpp"

namespace covert {

enum class Scheme { Proposed, DKO, ACO, NDP, DST, MDR };

std::string to_string(Scheme s);
/// Accepts the lower-case scheme names; throws UsageError otherwise.
Scheme parse_scheme(const std::string& name);

/// Nesterov-style momentum recursion with periodic restart.
struct ExtrapolationState {
  double beta_bar_prev = 1.0;
  double beta_bar_curr = 1.0;
  int restart_period = 50;
  int step_in_cycle = 0;

  void restart() {
    beta_bar_prev = 1.0;
    beta_bar_curr = 1.0;
    step_in_cycle = 0;
  }
};

/// Emits the next momentum coefficient and advances the recursion.
double next_beta(ExtrapolationState& state);

Eigen::VectorXd extrapolate(const Eigen::VectorXd& current, const Eigen::VectorXd& previous, double beta);
TrajectoryPlan extrapolate(const TrajectoryPlan& current, const TrajectoryPlan& previous, double beta);

struct SolverOptions {
  /// Proximal modulus; default_proximal_weight(cfg) when empty.
  std::optional<double> M;
  /// Halve M when the relative step falls below eps_converge, down to m_floor.
  bool adaptive_M = true;
  double m_floor = 1e-3;
  double eps_converge = 1e-3;
  int max_iters = 100;
  int restart_period = 50;
  double q_min = 1e-6;
  double smoothing_eps = 1e-6;
  /// q offset added to the warm start so the SCA rows hold strictly.
  double q_margin = 1e-3;
  Scheme scheme = Scheme::Proposed;
  InnerOptions inner;

  void validate() const;
};

/// 2 max(mu1, mu2, W / (delta d_max)).
double default_proximal_weight(const ScenarioConfig& cfg);

struct IterationRecord {
  int iter = 0;
  double surrogate_objective = 0.0;
  double exact_objective = 0.0;
  double step_norm = 0.0;
  double beta = 0.0;
  int inner_iters = 0;
  double M = 0.0;
  double kkt_residual = 0.0;
  bool accepted = true;
  bool momentum_restarted = false;
};

struct IterateState {
  TrajectoryPlan current;
  TrajectoryPlan previous;
  int iteration = 0;
  std::vector<double> objective_trace;
  ExtrapolationState extrapolation;
  double M = 0.0;
  std::vector<IterationRecord> log;
};

/// Nearest strictly feasible plan found by phase 1 from `plan`, with q tightened.
/// Throws InfeasibleError when the window's constraint set has no interior.
TrajectoryPlan restore_feasibility(const TrajectoryPlan& plan, const HorizonInstance& inst, const SolverOptions& opts);

/// Fresh state at `init` (q tightened, restored first when infeasible), with M resolved from `opts`.
IterateState start_state(const TrajectoryPlan& init, const HorizonInstance& inst, const SolverOptions& opts);

/// One outer step. A step that would raise the surrogate objective is retried without
/// momentum and, failing that, rejected (state unchanged apart from the log).
/// Throws SolverError when the inner solve cannot find a feasible point.
IterateState pdcae_iterate(const IterateState& state, const HorizonInstance& inst, const SolverOptions& opts);

struct HorizonResult {
  TrajectoryPlan plan;
  std::vector<IterationRecord> iterations;
  bool converged = false;
  double M_final = 0.0;
};

HorizonResult solve_horizon(const HorizonInstance& inst, const TrajectoryPlan& init, const SolverOptions& opts);

/// Copy of `cfg` with the scheme's disguise weights.
ScenarioConfig scheme_config(const ScenarioConfig& cfg, Scheme scheme);

/// Offline window for `scheme`: weights, objective kind and heading rows applied.
HorizonInstance scheme_instance(const TargetTrack& track, const ScenarioConfig& cfg,
                                const SolarLinearApprox& solar, Scheme scheme);

struct RunReport;

/// Full-mission solve from `init` (the shadow initialization when empty); report in report.hpp.
RunReport solve_offline(const TargetTrack& track, const ScenarioConfig& cfg, const SolverOptions& opts,
                        const std::optional<TrajectoryPlan>& init = std::nullopt);

}  // namespace covert
