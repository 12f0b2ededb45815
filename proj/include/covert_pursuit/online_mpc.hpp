#pragma once

// Receding-horizon planning: predict the target over the next window, solve the window
// with the offline machinery, execute the first waypoint, repeat.

#include <optional>
#include <string>
#include <vector>

#include "covert_pursuit/pdcae_solver.hpp"
#include "covert_pursuit/report.hpp"

namespace covert {

enum class PredictorMode { ConstantVelocity, Oracle };

std::string to_string(PredictorMode m);
PredictorMode parse_predictor(const std::string& name);

struct TargetPredictor {
  PredictorMode mode = PredictorMode::ConstantVelocity;
  std::size_t history_window = 2;
  /// Ground truth for Oracle mode.
  std::optional<TargetTrack> truth;
};

/// Target positions for the next n slots after the last observation in `history`.
/// Oracle mode reads them from the truth track (clamped at its end).
/// Throws DomainError when ConstantVelocity gets fewer than two observations.
std::vector<TargetPoint> predict_target(const std::vector<TargetPoint>& history, std::size_t n,
                                        const TargetPredictor& predictor);

struct OnlineOptions {
  std::size_t horizon = 25;
  PredictorMode predictor = PredictorMode::ConstantVelocity;
  std::size_t history_window = 2;
  bool heading_rows = false;
  /// Scale of the per-slot flight-region shrink applied to predicted targets.
  double margin_gain = 1.5;
  /// Upper bound on that shrink as a fraction of the usable radius d_max - (z_lower - H).
  double margin_cap_fraction = 0.25;
  double soft_ffr_weight = 1e3;
  SolverOptions solver;

  void validate() const;
};

struct MpcState {
  std::size_t tau = 0;
  TrajectoryPlan executed;  // waypoints 0..tau, q for slots 1..tau
  double consumed_J = 0.0;
  double harvested_J = 0.0;
  double reserve_J = 0.0;
  std::vector<TargetPoint> target_history;  // observations 0..tau
  TrajectoryPlan last_plan;                 // previous window plan (anchor at tau - 1)
};

/// Energy carried into the window, in slot-power units: sum over executed slots of
/// exact consumption minus exact harvest.
double energy_carry(const MpcState& state, const ScenarioConfig& cfg);

struct HorizonPlan {
  TrajectoryPlan plan;  // anchor = current position, slots tau+1..tau+n
  std::string mode;     // "nominal", "soft_ffr", "pursuit" or "shifted" (previous plan reused)
  bool converged = false;
  int outer_iterations = 0;
};

/// Window instance at the state's tick for the given predictions.
HorizonInstance horizon_instance(const MpcState& state, const std::vector<TargetPoint>& predictions,
                                 const ScenarioConfig& cfg, const SolarLinearApprox& solar,
                                 const OnlineOptions& opts);

/// Solves the window; falls back to a softened flight region when the hard window fails.
HorizonPlan plan_horizon(const MpcState& state, const std::vector<TargetPoint>& predictions,
                         const ScenarioConfig& cfg, const SolarLinearApprox& solar, const OnlineOptions& opts);

RunReport run_online(const TargetTrack& track, const ScenarioConfig& cfg, const OnlineOptions& opts);

/// RMS of the one-slot-ahead prediction error of `predictor` replayed over `track`.
double prediction_rms(const TargetTrack& track, const TargetPredictor& predictor);

}  // namespace covert
