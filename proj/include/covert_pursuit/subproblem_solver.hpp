#pragma once

// Primal log-barrier interior-point method for the window subproblem, with a
// banded Newton system and a low-rank correction for the cumulative energy rows.

#include <string>

#include <Eigen/Core>

#include "covert_pursuit/dc_transform.hpp"

namespace covert {

enum class InnerStatus { Optimal, MaxIters, Infeasible };

std::string to_string(InnerStatus s);

struct InnerOptions {
  /// Barrier stages stop once the duality gap bound m/t falls below gap_tol (1 + |objective|).
  double gap_tol = 1e-10;
  /// Optimal requires the KKT residual below this value.
  double kkt_tol = 1e-8;
  /// Newton stops within a stage when lambda^2 / 2 falls below this value.
  double newton_tol = 1e-8;
  double barrier_growth = 10.0;
  int max_newton = 2000;
  /// Minimum slack of a point returned by phase1_feasible.
  double strict_margin = 1e-8;
  double phase1_gamma = 1e-3;
};

/// kkt_residual is the relative bound (m + lambda^2 / 2) / (t (1 + |phi|)) on the
/// suboptimality of `point`: barrier gap plus the remaining Newton decrement.
struct InnerSolution {
  Eigen::VectorXd point;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int inner_iterations = 0;
  int stages = 0;
  InnerStatus status = InnerStatus::Infeasible;
};

/// Minimizes subproblem_objective over the rows of `sub`. A warm start that is not
/// strictly feasible is first repaired with phase1_feasible.
InnerSolution solve_convex(const ConvexSubproblem& sub, const Eigen::VectorXd& warm_start,
                           const InnerOptions& opts = {});

struct Phase1Result {
  bool feasible = false;
  Eigen::VectorXd point;
  /// Largest row violation max_i g_i at `point` (negative when strictly feasible).
  double max_violation = 0.0;
  int iterations = 0;
};

/// Finds a point whose every slack is at least opts.strict_margin, staying close to `hint`.
Phase1Result phase1_feasible(const ConvexSubproblem& sub, const Eigen::VectorXd& hint,
                             const InnerOptions& opts = {});

/// Number of one-sided inequalities in `sub` (two per two-sided row).
std::size_t inequality_count(const ConvexSubproblem& sub);

}  // namespace covert
