#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "covert_pursuit/errors.hpp"
#include "covert_pursuit/pdcae_solver.hpp"
#include "covert_pursuit/subproblem_solver.hpp"

using namespace covert;

namespace {

struct Window {
  ScenarioConfig cfg;
  TargetTrack track;
  HorizonInstance inst;
  TrajectoryPlan start;
};

Window short_window(std::size_t n) {
  Window w;
  w.cfg.n_slots = n;
  w.cfg.horizon_T = w.cfg.delta * static_cast<double>(n);
  w.track = generate_target_track(w.cfg);
  w.inst = make_offline_instance(w.track, w.cfg, solar_for(w.cfg));
  w.start = restore_feasibility(initial_plan(w.track, w.cfg), w.inst, SolverOptions{});
  return w;
}

double min_slack(const ConvexSubproblem& sub, const Eigen::VectorXd& X) {
  const auto s = constraint_slacks(sub, X);
  return *std::min_element(s.begin(), s.end());
}

}  // namespace

TEST_CASE("status names") {
  CHECK(to_string(InnerStatus::Optimal) == "optimal");
  CHECK(to_string(InnerStatus::MaxIters) == "max_iters");
  CHECK(to_string(InnerStatus::Infeasible) == "infeasible");
}

TEST_CASE("phase 1 returns a strictly interior point") {
  Window w = short_window(12);
  const ConvexSubproblem sub = assemble_subproblem(w.start, pack(w.start), w.inst, 5.0);
  Eigen::VectorXd hint = pack(w.start);
  for (Eigen::Index i = 0; i < hint.size(); i += 4) hint[i] += 40.0;  // far outside the flight region
  CHECK(min_slack(sub, hint) < 0.0);
  const Phase1Result r = phase1_feasible(sub, hint);
  REQUIRE(r.feasible);
  CHECK(r.max_violation < 0.0);
  CHECK(min_slack(sub, r.point) >= InnerOptions{}.strict_margin * 0.999);
  CHECK_THROWS_AS(phase1_feasible(sub, Eigen::VectorXd::Zero(3)), DomainError);
}

TEST_CASE("empty interior is reported, not hidden") {
  Window w = short_window(6);
  ConvexSubproblem sub = assemble_subproblem(w.start, pack(w.start), w.inst, 5.0);
  REQUIRE_FALSE(sub.causality.empty());
  for (auto& row : sub.causality) row.budget = -1e6;
  const Phase1Result r = phase1_feasible(sub, pack(w.start));
  CHECK_FALSE(r.feasible);
  CHECK(r.max_violation > 0.0);
  const InnerSolution s = solve_convex(sub, pack(w.start));
  CHECK(s.status == InnerStatus::Infeasible);
}

TEST_CASE("inner solve is optimal against feasible perturbations") {
  Window w = short_window(15);
  const Eigen::VectorXd X0 = pack(w.start);
  const ConvexSubproblem sub = build_subproblem(w.start, X0, w.inst, 5.0);
  const InnerSolution s = solve_convex(sub, X0);
  REQUIRE(s.status == InnerStatus::Optimal);
  CHECK(s.kkt_residual <= InnerOptions{}.kkt_tol);
  CHECK(min_slack(sub, s.point) >= 0.0);
  CHECK(s.objective == doctest::Approx(subproblem_objective(sub, s.point)).epsilon(1e-12));
  CHECK(s.objective <= subproblem_objective(sub, X0) + 1e-9);

  // Segments toward random interior points stay feasible by convexity.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  const double tol = 1e-7 * (1.0 + std::abs(s.objective));
  int tried = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::VectorXd hint = s.point;
    for (Eigen::Index i = 0; i < hint.size(); ++i) hint[i] += 2.0 * n01(rng);
    const Phase1Result other = phase1_feasible(sub, hint);
    if (!other.feasible) continue;
    ++tried;
    for (double theta : {1.0, 1e-1, 1e-2, 1e-3, 1e-4}) {
      const Eigen::VectorXd Y = s.point + theta * (other.point - s.point);
      CHECK(subproblem_objective(sub, Y) >= s.objective - tol);
    }
  }
  CHECK(tried >= 30);
}

TEST_CASE("proximal term makes the subproblem strongly convex") {
  Window w = short_window(10);
  const double M = 5.0;
  const Eigen::VectorXd X0 = pack(w.start);
  const ConvexSubproblem sub = build_subproblem(w.start, X0, w.inst, M);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd a = X0, b = X0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a[i] += 0.5 * n01(rng);
      b[i] += 0.5 * n01(rng);
    }
    for (Eigen::Index i = 3; i < a.size(); i += 4) {
      a[i] = std::abs(a[i]) + 0.1;
      b[i] = std::abs(b[i]) + 0.1;
    }
    const double mid = subproblem_objective(sub, 0.5 * (a + b));
    const double chord = 0.5 * subproblem_objective(sub, a) + 0.5 * subproblem_objective(sub, b);
    CHECK(mid <= chord - M / 8.0 * (a - b).squaredNorm() + 1e-9 * (1.0 + std::abs(chord)));
  }
}

TEST_CASE("a warm start at the optimum finishes quickly and stays put") {
  Window w = short_window(10);
  const Eigen::VectorXd X0 = pack(w.start);
  const ConvexSubproblem sub = build_subproblem(w.start, X0, w.inst, 5.0);
  const InnerSolution cold = solve_convex(sub, X0);
  REQUIRE(cold.status == InnerStatus::Optimal);
  const InnerSolution warm = solve_convex(sub, cold.point);
  REQUIRE(warm.status == InnerStatus::Optimal);
  CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
  CHECK((warm.point - cold.point).norm() <= 1e-3 * (1.0 + cold.point.norm()));
  CHECK(warm.stages <= 2);
  CHECK_THROWS_AS(solve_convex(sub, Eigen::VectorXd::Zero(5)), DomainError);
}

TEST_CASE("inequality count covers every one-sided row") {
  Window w = short_window(8);
  const ConvexSubproblem sub = build_subproblem(w.start, pack(w.start), w.inst, 5.0);
  CHECK(inequality_count(sub) == constraint_slacks(sub, pack(w.start)).size());
  CHECK(inequality_count(sub) >= sub.row_count());
}

TEST_CASE("every feasible warm start reaches the same minimizer") {
  Window w = short_window(10);
  const Eigen::VectorXd X0 = pack(w.start);
  const ConvexSubproblem sub = build_subproblem(w.start, X0, w.inst, 5.0);
  const InnerSolution ref = solve_convex(sub, X0);
  REQUIRE(ref.status == InnerStatus::Optimal);
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n01;
  int reached = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd hint = X0;
    for (Eigen::Index i = 0; i < hint.size(); ++i) hint[i] += n01(rng);
    const Phase1Result start = phase1_feasible(sub, hint);
    if (!start.feasible) continue;
    const InnerSolution s = solve_convex(sub, start.point);
    REQUIRE(s.status == InnerStatus::Optimal);
    CHECK(s.objective == doctest::Approx(ref.objective).epsilon(1e-8));
    CHECK((s.point - ref.point).norm() <= 1e-3 * (1.0 + ref.point.norm()));
    ++reached;
  }
  CHECK(reached >= 8);
}
