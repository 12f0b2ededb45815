#include "covert_pursuit/pdcae_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "covert_pursuit/errors.hpp"
#include "covert_pursuit/report.hpp"

namespace covert {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Proposed: return "proposed";
    case Scheme::DKO: return "dko";
    case Scheme::ACO: return "aco";
    case Scheme::NDP: return "ndp";
    case Scheme::DST: return "dst";
    case Scheme::MDR: return "mdr";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::Proposed, Scheme::DKO, Scheme::ACO, Scheme::NDP, Scheme::DST, Scheme::MDR}) {
    if (name == to_string(s)) return s;
  }
  throw UsageError("unknown scheme '" + name + "'");
}

double next_beta(ExtrapolationState& state) {
  if (state.restart_period > 0 && state.step_in_cycle >= state.restart_period) state.restart();
  const double beta = (state.beta_bar_prev - 1.0) / state.beta_bar_curr;
  const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * state.beta_bar_curr * state.beta_bar_curr));
  state.beta_bar_prev = state.beta_bar_curr;
  state.beta_bar_curr = next;
  ++state.step_in_cycle;
  return beta;
}

Eigen::VectorXd extrapolate(const Eigen::VectorXd& current, const Eigen::VectorXd& previous, double beta) {
  if (current.size() != previous.size()) throw DomainError("extrapolation operands differ in length");
  return current + beta * (current - previous);
}

TrajectoryPlan extrapolate(const TrajectoryPlan& current, const TrajectoryPlan& previous, double beta) {
  if (current.n_slots() != previous.n_slots()) throw DomainError("extrapolation operands differ in length");
  TrajectoryPlan out = current;
  for (std::size_t t = 0; t < current.waypoints.size(); ++t) {
    const Waypoint& c = current.waypoints[t];
    const Waypoint& p = previous.waypoints[t];
    out.waypoints[t] = {c.x + beta * (c.x - p.x), c.y + beta * (c.y - p.y), c.z + beta * (c.z - p.z)};
  }
  for (std::size_t k = 0; k < current.q.size(); ++k) {
    out.q[k] = current.q[k] + beta * (current.q[k] - previous.q[k]);
  }
  return out;
}

void SolverOptions::validate() const {
  if (M && !(*M > 0.0)) throw DomainError("M must be positive");
  if (!(m_floor > 0.0)) throw DomainError("m_floor must be positive");
  if (!(eps_converge > 0.0)) throw DomainError("eps_converge must be positive");
  if (max_iters < 1) throw DomainError("max_iters must be at least 1");
  if (restart_period < 1) throw DomainError("restart_period must be at least 1");
  if (!(q_min > 0.0)) throw DomainError("q_min must be positive");
  if (!(smoothing_eps > 0.0)) throw DomainError("smoothing_eps must be positive");
  if (!(q_margin >= 0.0)) throw DomainError("q_margin must be nonnegative");
}

double default_proximal_weight(const ScenarioConfig& cfg) {
  return 2.0 * std::max({cfg.mu1, cfg.mu2, cfg.thrust.weight_force() / (cfg.delta * cfg.d_max)});
}

TrajectoryPlan restore_feasibility(const TrajectoryPlan& plan, const HorizonInstance& inst, const SolverOptions& opts) {
  TrajectoryPlan start = plan;
  tighten_q(start, inst.cfg);
  const Eigen::VectorXd X = pack(start);
  const double M = opts.M.value_or(default_proximal_weight(inst.cfg));
  const ConvexSubproblem sub = assemble_subproblem(start, X, inst, M, opts.q_min, opts.smoothing_eps);
  Eigen::VectorXd hint = X;
  for (std::size_t k = 0; k < sub.n; ++k) hint[static_cast<Eigen::Index>(4 * k + 3)] += opts.q_margin;
  const Phase1Result p1 = phase1_feasible(sub, hint, opts.inner);
  if (!p1.feasible) {
    throw InfeasibleError("constraint set has no strictly feasible point (smallest achievable violation " +
                          std::to_string(p1.max_violation) + ")");
  }
  TrajectoryPlan out = unpack(p1.point, inst.anchor);
  tighten_q(out, inst.cfg);
  return out;
}

IterateState start_state(const TrajectoryPlan& init, const HorizonInstance& inst, const SolverOptions& opts) {
  opts.validate();
  IterateState state;
  state.current = init;
  tighten_q(state.current, inst.cfg);
  state.M = opts.M.value_or(default_proximal_weight(inst.cfg));
  try {
    build_subproblem(state.current, pack(state.current), inst, state.M, opts.q_min, opts.smoothing_eps);
  } catch (const InfeasibleError&) {
    state.current = restore_feasibility(state.current, inst, opts);
  }
  state.previous = state.current;
  state.extrapolation.restart_period = opts.restart_period;
  state.objective_trace.push_back(surrogate_objective(state.current, inst));
  return state;
}

namespace {

struct Candidate {
  TrajectoryPlan plan;
  double objective = 0.0;
  InnerSolution inner;
};

Candidate inner_step(const IterateState& state, const HorizonInstance& inst, const SolverOptions& opts,
                     double beta) {
  const Eigen::VectorXd X = pack(state.current);
  const Eigen::VectorXd lambda = extrapolate(X, pack(state.previous), beta);
  const ConvexSubproblem sub = build_subproblem(state.current, lambda, inst, state.M, opts.q_min, opts.smoothing_eps);
  Eigen::VectorXd warm = X;
  for (std::size_t k = 0; k < sub.n; ++k) warm[static_cast<Eigen::Index>(4 * k + 3)] += opts.q_margin;
  Candidate c;
  c.inner = solve_convex(sub, warm, opts.inner);
  if (c.inner.status == InnerStatus::Infeasible) {
    throw SolverError("inner solve found no strictly feasible point", c.inner.kkt_residual);
  }
  c.plan = unpack(c.inner.point, inst.anchor);
  // Lowering q to the equality value keeps every row satisfied and can only reduce the objective.
  tighten_q(c.plan, inst.cfg);
  c.objective = surrogate_objective(c.plan, inst);
  return c;
}

}  // namespace

IterateState pdcae_iterate(const IterateState& state, const HorizonInstance& inst, const SolverOptions& opts) {
  if (state.objective_trace.empty()) throw DomainError("iterate state has no objective trace; use start_state");
  IterateState next = state;
  const double f_prev = state.objective_trace.back();
  double beta = next_beta(next.extrapolation);
  Candidate c = inner_step(state, inst, opts, beta);
  int inner_iters = c.inner.inner_iterations;
  bool restarted = false;
  if (c.objective > f_prev && beta > 0.0) {
    next.extrapolation.restart();
    beta = next_beta(next.extrapolation);
    c = inner_step(state, inst, opts, beta);
    inner_iters += c.inner.inner_iterations;
    restarted = true;
  }

  IterationRecord rec;
  rec.iter = state.iteration + 1;
  rec.beta = beta;
  rec.inner_iters = inner_iters;
  rec.M = state.M;
  rec.kkt_residual = c.inner.kkt_residual;
  rec.momentum_restarted = restarted;
  rec.accepted = c.objective <= f_prev;
  const Eigen::VectorXd X = pack(state.current);
  if (rec.accepted) {
    rec.step_norm = (pack(c.plan) - X).norm() / std::max(1.0, X.norm());
    next.previous = state.current;
    next.current = std::move(c.plan);
    if (c.objective > next.objective_trace.back() + 1e-9) {
      throw MonotonicityError("surrogate objective increased between accepted iterates");
    }
    next.objective_trace.push_back(c.objective);
  } else {
    // The inner solve cannot improve on the current point at this accuracy.
    rec.step_norm = 0.0;
  }
  rec.surrogate_objective = next.objective_trace.back();
  rec.exact_objective = exact_objective(next.current, inst);
  next.iteration = rec.iter;
  next.log.push_back(rec);
  return next;
}

HorizonResult solve_horizon(const HorizonInstance& inst, const TrajectoryPlan& init, const SolverOptions& opts) {
  IterateState state = start_state(init, inst, opts);
  HorizonResult res;
  while (state.iteration < opts.max_iters) {
    state = pdcae_iterate(state, inst, opts);
    const IterationRecord& rec = state.log.back();
    if (rec.accepted && rec.step_norm >= opts.eps_converge) continue;
    if (opts.adaptive_M && state.M > opts.m_floor) {
      state.M = std::max(opts.m_floor, 0.5 * state.M);
      state.extrapolation.restart();
      continue;
    }
    res.converged = true;
    break;
  }
  res.plan = state.current;
  res.iterations = std::move(state.log);
  res.M_final = state.M;
  return res;
}

ScenarioConfig scheme_config(const ScenarioConfig& cfg, Scheme scheme) {
  ScenarioConfig out = cfg;
  if (scheme == Scheme::DKO || scheme == Scheme::NDP) out.mu2 = 0.0;
  if (scheme == Scheme::ACO || scheme == Scheme::NDP) out.mu1 = 0.0;
  return out;
}

HorizonInstance scheme_instance(const TargetTrack& track, const ScenarioConfig& cfg,
                                const SolarLinearApprox& solar, Scheme scheme) {
  HorizonInstance inst = make_offline_instance(track, scheme_config(cfg, scheme), solar);
  if (scheme == Scheme::DST) inst.objective = ObjectiveKind::DistanceSquared;
  if (scheme == Scheme::MDR) inst.heading_rows = true;
  return inst;
}

RunReport solve_offline(const TargetTrack& track, const ScenarioConfig& cfg, const SolverOptions& opts,
                        const std::optional<TrajectoryPlan>& init) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  opts.validate();
  const SolarLinearApprox solar = solar_for(cfg);
  const HorizonInstance inst = scheme_instance(track, cfg, solar, opts.scheme);
  const HorizonResult res = solve_horizon(inst, init ? *init : initial_plan(track, inst.cfg), opts);
  RunReport report = make_report(to_string(opts.scheme), inst.cfg, cfg, opts, solar, track, res.plan,
                                 res.iterations, res.converged);
  report.M_final = res.M_final;
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace covert
