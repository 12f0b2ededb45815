#pragma once

// Convexified per-iteration subproblem: surrogate propulsion objective, SCA
// expansion of the q-constraint, linear-solar energy causality and the
// gradients of the linearized concave part.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "covert_pursuit/power_models.hpp"
#include "covert_pursuit/scenario.hpp"

namespace covert {

enum class ObjectiveKind {
  Surrogate,         // sum of surrogate propulsion powers
  DistanceSquared,   // (sum of horizontal step lengths)^2, the distance-based baseline
};

/// One planning window: the slots after `anchor`, with their target positions.
/// The offline problem is the window that starts at t = 0 and covers the mission.
struct HorizonInstance {
  ScenarioConfig cfg;
  SolarLinearApprox solar;
  Waypoint anchor;
  /// Altitude one slot before the anchor; enables the altitude-rate row of the first slot.
  std::optional<double> z_before_anchor;
  TargetPoint target_anchor;
  std::vector<TargetPoint> target;  // slots 1..n (index k = slot - 1)
  /// Per-slot inward shrink of the flight region (m); empty means none.
  std::vector<double> ffr_margin;
  /// Sum over executed slots of (consumption - harvested), W per slot.
  double energy_carry = 0.0;
  ObjectiveKind objective = ObjectiveKind::Surrogate;
  bool heading_rows = false;
  /// Replaces the distance and trailing rows by a quadratic penalty.
  bool soft_ffr = false;
  double soft_ffr_weight = 1e3;
  /// Smoothing length (m) of the step norms in the distance-squared objective.
  double distance_smoothing = 1e-2;

  std::size_t n() const { return target.size(); }
  double margin(std::size_t k) const { return ffr_margin.empty() ? 0.0 : ffr_margin[k]; }
};

/// Linear solar bound selected by cfg.solar_fit (override coefficients or a fit on the band).
SolarLinearApprox solar_for(const ScenarioConfig& cfg);

/// Offline window over a full track (slots 1..N after the start (0, 0, z0)).
HorizonInstance make_offline_instance(const TargetTrack& track, const ScenarioConfig& cfg,
                                      const SolarLinearApprox& solar);

/// Affine minorant constant + coef_dx dx + coef_dy dy + coef_q q of q^2 + (dx^2 + dy^2) / v0hat^2.
struct SCAExpansion {
  double constant = 0.0;
  double coef_dx = 0.0;
  double coef_dy = 0.0;
  double coef_q = 0.0;

  double operator()(double dx, double dy, double q) const {
    return constant + coef_dx * dx + coef_dy * dy + coef_q * q;
  }
};

/// Expansion of slot t's q-constraint at `iterate`. Throws DomainError when q_t <= 0.
SCAExpansion expand_q_constraint(const TrajectoryPlan& iterate, std::size_t t, const ScenarioConfig& cfg);

struct SurrogateCoefficients {
  double p0 = 0.0;
  double quad = 0.0;   // 3 P0 / (U_tip^2 delta^2)
  double p1 = 0.0;
  double cubic = 0.0;  // d_f rho s A / (2 delta^3)

  static SurrogateCoefficients from(const PropulsionParams& p, double delta);
};

/// Surrogate propulsion power of one slot from its horizontal displacement and q.
double surrogate_propulsion(double dx, double dy, double q, const PropulsionParams& p, double delta);

/// margin_t = sum_{n<=t} (c1 z_n + c2) + eta0 E0 / delta - carry - sum_{n<=t} (P~_h^n + P_v^n).
std::vector<double> energy_causality_rows(const TrajectoryPlan& plan, const SolarLinearApprox& approx,
                                          const ScenarioConfig& cfg, double energy_carry = 0.0);

/// Gradient of sum_t f_t with respect to the packed decision vector (x, y, z, q per slot).
Eigen::VectorXd gradient_f(const TrajectoryPlan& plan, const std::vector<TargetPoint>& target,
                           double mu1, double mu2);
Eigen::VectorXd gradient_f(const TrajectoryPlan& plan, const TargetTrack& track, double mu1, double mu2);

/// Gradient of sum_t P_v^t; only the last altitude keeps a nonzero coefficient.
Eigen::VectorXd gradient_pv(std::size_t n_slots, const ScenarioConfig& cfg);

/// Packs slots 1..n of `plan` as (x, y, z, q) blocks.
Eigen::VectorXd pack(const TrajectoryPlan& plan);
TrajectoryPlan unpack(const Eigen::VectorXd& X, const Waypoint& anchor);

// Constraint descriptors. `k` is the window slot index (slot k + 1); k - 1 = -1 refers to the anchor.
struct DiskRow { std::size_t k; double radius; };                      // dx^2 + dy^2 <= r^2
struct AbsRow { std::size_t k; double bound; };                        // |linear form| <= bound
struct SphereRow { std::size_t k; double a, b, h, radius; };           // 3D distance <= r
struct BoundRow { std::size_t k; int coord; double bound; bool upper; };  // coord <= / >= bound
struct CausalityRow { std::size_t k; double budget; };                 // cumulative consumption <= budget
struct ScaRow { std::size_t k; SCAExpansion expansion; };              // 1/q^2 <= expansion
struct HeadingRow { std::size_t k; double slope; };                    // dy >= slope dx and dx >= 0
struct SoftFfrRow { std::size_t k; double a, b, h, radius; };

struct ConvexSubproblem {
  std::size_t n = 0;
  Waypoint anchor;
  std::optional<double> z_before_anchor;
  double delta = 0.0;

  Eigen::VectorXd proximal_center;
  double proximal_weight = 0.0;
  Eigen::VectorXd linear_cost;
  ObjectiveKind objective = ObjectiveKind::Surrogate;
  SurrogateCoefficients propulsion;
  double smoothing_eps = 1e-6;
  double distance_eps = 1e-2;
  double soft_ffr_weight = 0.0;

  // Energy causality data.
  double thrust_per_meter = 0.0;  // W / delta
  double solar_c1 = 0.0;
  double solar_c2 = 0.0;

  std::vector<DiskRow> horizontal;
  std::vector<AbsRow> vertical;
  std::vector<AbsRow> accel;
  std::vector<SphereRow> ffr_distance;
  std::vector<BoundRow> ffr_bounds;  // x <= a, y <= b, z >= z_l
  std::vector<CausalityRow> causality;
  std::vector<ScaRow> sca;
  std::vector<std::size_t> q_nonneg;
  std::vector<HeadingRow> heading;
  std::vector<SoftFfrRow> soft_ffr;

  std::size_t dimension() const { return 4 * n; }
  /// Constraint descriptors; a two-sided row counts once.
  std::size_t row_count() const;
};

/// Convexified window problem at `iterate` with proximal center `lambda`.
/// Throws InfeasibleError when `iterate` violates the window's constraint set.
ConvexSubproblem build_subproblem(const TrajectoryPlan& iterate, const Eigen::VectorXd& lambda,
                                  const HorizonInstance& inst, double M, double q_min = 1e-6,
                                  double smoothing_eps = 1e-6);

/// Same assembly without the feasibility check on `iterate` (used for restoration).
ConvexSubproblem assemble_subproblem(const TrajectoryPlan& iterate, const Eigen::VectorXd& lambda,
                                     const HorizonInstance& inst, double M, double q_min = 1e-6,
                                     double smoothing_eps = 1e-6);

/// Slack of every one-sided inequality (two per two-sided row), in a fixed order.
/// Nonnegative everywhere iff X is feasible.
std::vector<double> constraint_slacks(const ConvexSubproblem& sub, const Eigen::VectorXd& X);

/// linear_cost . X + M/2 |X - lambda|^2 + (smoothed) propulsion or distance term.
double subproblem_objective(const ConvexSubproblem& sub, const Eigen::VectorXd& X);

/// Outer objective (P_h + P_v - f) of a window plan; q enters through the surrogate.
/// For the distance-squared kind the propulsion sum is replaced by the squared smoothed path length.
double surrogate_objective(const TrajectoryPlan& plan, const HorizonInstance& inst);

/// Same objective with q eliminated (exact propulsion power of the plan's speeds).
double exact_objective(const TrajectoryPlan& plan, const HorizonInstance& inst);

}  // namespace covert
