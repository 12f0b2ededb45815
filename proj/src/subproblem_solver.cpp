#include "covert_pursuit/subproblem_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "covert_pursuit/banded.hpp"
#include "covert_pursuit/errors.hpp"
#include "terms.hpp"

namespace covert {

namespace {

using Eigen::VectorXd;
using detail::FormBuilder;
using detail::Term;
using detail::kX;
using detail::kY;

// accel rows reach back two slots: z_k to z_{k-2} spans 8 packed positions.
constexpr std::size_t kHalfBandwidth = 8;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr BandedSpd* kNoHessian = nullptr;
constexpr double kDropTol = 1e-6;

struct Linearization {
  explicit Linearization(std::size_t dim)
      : hess(dim, kHalfBandwidth),
        grad(VectorXd::Zero(static_cast<Eigen::Index>(dim))),
        border(VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

  BandedSpd hess;
  VectorXd grad;
  std::vector<VectorXd> lowrank;  // Hessian += sum u u^T
  VectorXd border;                // d^2 / dX dsigma (phase 1)
  double sigma_grad = 0.0;
  double sigma_hess = 0.0;
};

/// Subproblem objective; derivatives scaled by `scale` are added to `lin` when given.
double objective_terms(const ConvexSubproblem& sub, const VectorXd& X, double scale, Linearization* lin) {
  const VectorXd offset = X - sub.proximal_center;
  double value = sub.linear_cost.dot(X) + 0.5 * sub.proximal_weight * offset.squaredNorm();
  if (lin != nullptr) {
    lin->grad += scale * (sub.linear_cost + sub.proximal_weight * offset);
    lin->hess.add_diagonal(scale * sub.proximal_weight);
  }
  FormBuilder fb(sub);
  Term t;
  double unused = 0.0;
  if (sub.objective == ObjectiveKind::Surrogate) {
    for (std::size_t k = 0; k < sub.n; ++k) {
      detail::propulsion_term(sub, fb, k, X, false, t);
      value += t.val;
      if (lin != nullptr) detail::accumulate(t, scale, unused, lin->grad, &lin->hess);
    }
  } else {
    double path = 0.0;
    VectorXd grad_path;
    std::vector<Term> steps;
    if (lin != nullptr) {
      grad_path = VectorXd::Zero(X.size());
      steps.reserve(sub.n);
    }
    for (std::size_t k = 0; k < sub.n; ++k) {
      t.reset();
      const long kk = static_cast<long>(k);
      const int iu = t.push(fb.diff(kk, kX), X);
      const int iv = t.push(fb.diff(kk, kY), X);
      detail::smoothed_norm(t.wv[iu], t.wv[iv], sub.distance_eps, 1.0, t, iu, iv);
      path += t.val;
      if (lin != nullptr) {
        detail::accumulate(t, 1.0, unused, grad_path, kNoHessian);
        steps.push_back(t);
      }
    }
    value += path * path;
    if (lin != nullptr) {
      lin->grad += scale * 2.0 * path * grad_path;
      VectorXd scratch = VectorXd::Zero(X.size());
      for (const Term& s : steps) detail::accumulate(s, scale * 2.0 * path, unused, scratch, &lin->hess);
      lin->lowrank.push_back(std::sqrt(2.0 * scale) * grad_path);
    }
  }
  for (const auto& r : sub.soft_ffr) {
    detail::soft_ffr_term(r, sub.soft_ffr_weight, fb, X, t);
    value += t.val;
    if (lin != nullptr) detail::accumulate(t, scale, unused, lin->grad, &lin->hess);
  }
  return value;
}

/// -sum log(sigma - g_i(X)); +inf outside the interior. Phase 1 also fills the sigma parts.
double barrier_terms(const ConvexSubproblem& sub, const VectorXd& X, double sigma, Linearization* lin,
                     bool phase1) {
  double value = 0.0;
  double unused = 0.0;
  bool interior = true;
  const bool in_domain = detail::for_each_local_row(sub, X, [&](const Term& t) {
    if (!interior) return;
    const double s = sigma - t.val;
    if (!(s > 0.0)) {
      interior = false;
      return;
    }
    value -= std::log(s);
    if (lin != nullptr) {
      detail::accumulate(t, 1.0 / s, unused, lin->grad, &lin->hess, 1.0 / (s * s));
      if (phase1) {
        detail::accumulate(t, -1.0 / (s * s), unused, lin->border, kNoHessian);
        lin->sigma_grad -= 1.0 / s;
        lin->sigma_hess += 1.0 / (s * s);
      }
    }
  });
  if (!in_domain || !interior) return kInf;
  if (sub.causality.empty()) return value;

  FormBuilder fb(sub);
  std::vector<Term> consumption(sub.n);
  std::vector<double> slack(sub.causality.size());
  double cumulative = 0.0;
  std::size_t row = 0;
  for (std::size_t k = 0; k < sub.n; ++k) {
    detail::propulsion_term(sub, fb, k, X, true, consumption[k]);
    cumulative += consumption[k].val;
    if (row < sub.causality.size() && sub.causality[row].k == k) {
      const double s = sigma + sub.causality[row].budget - cumulative;
      if (!(s > 0.0)) return kInf;
      slack[row] = s;
      value -= std::log(s);
      ++row;
    }
  }
  if (lin == nullptr) return value;

  // Row r depends on slots 0..k_r, so slot j collects the weights of all rows at or after j.
  std::vector<double> w1(sub.n, 0.0);
  std::vector<double> w2(sub.n, 0.0);
  for (std::size_t r = 0; r < row; ++r) {
    w1[sub.causality[r].k] += 1.0 / slack[r];
    w2[sub.causality[r].k] += 1.0 / (slack[r] * slack[r]);
  }
  for (std::size_t j = sub.n; j-- > 1;) {
    w1[j - 1] += w1[j];
    w2[j - 1] += w2[j];
  }
  for (std::size_t k = 0; k < sub.n; ++k) {
    detail::accumulate(consumption[k], w1[k], unused, lin->grad, &lin->hess);
    if (phase1) detail::accumulate(consumption[k], -w2[k], unused, lin->border, kNoHessian);
  }
  VectorXd running = VectorXd::Zero(X.size());
  row = 0;
  for (std::size_t k = 0; k < sub.n && row < sub.causality.size(); ++k) {
    detail::accumulate(consumption[k], 1.0, unused, running, kNoHessian);
    if (sub.causality[row].k != k) continue;
    const double s = slack[row];
    lin->lowrank.push_back(running / s);
    if (phase1) {
      lin->sigma_grad -= 1.0 / s;
      lin->sigma_hess += 1.0 / (s * s);
    }
    ++row;
  }
  return value;
}

/// (H + U U^T)^{-1} through a banded Cholesky of H and a small capacitance matrix.
class NewtonFactor {
 public:
  bool build(Linearization& lin) {
    drop_negligible(lin);
    BandedSpd backup = lin.hess;
    double shift = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      if (lin.hess.factorize()) break;
      double scale = 1.0;
      for (std::size_t i = 0; i < backup.size(); ++i) scale = std::max(scale, std::abs(backup(i, i)));
      shift = shift == 0.0 ? 1e-12 * scale : shift * 100.0;
      lin.hess = backup;
      lin.hess.add_diagonal(shift);
    }
    if (!lin.hess.factorized()) return false;
    h_ = &lin.hess;
    const auto r = static_cast<Eigen::Index>(lin.lowrank.size());
    if (r == 0) return true;
    const auto n = static_cast<Eigen::Index>(lin.hess.size());
    u_.resize(n, r);
    for (Eigen::Index j = 0; j < r; ++j) u_.col(j) = lin.lowrank[static_cast<std::size_t>(j)];
    z_ = u_;
    for (Eigen::Index j = 0; j < r; ++j) h_->solve_in_place(z_.col(j));
    Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(r, r) + u_.transpose() * z_;
    cap_.compute(cap);
    return cap_.info() == Eigen::Success;
  }

  VectorXd solve(const VectorXd& b) const {
    VectorXd x = h_->solve(b);
    if (u_.cols() > 0) x -= z_ * cap_.solve(u_.transpose() * x);
    return x;
  }

 private:
  // Rank-one terms whose size relative to the diagonal is below kDropTol barely move
  // the Newton direction; the line search absorbs the difference.
  static void drop_negligible(Linearization& lin) {
    if (lin.lowrank.empty()) return;
    const std::size_t n = lin.hess.size();
    VectorXd inv_diag(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) inv_diag[static_cast<Eigen::Index>(i)] = 1.0 / lin.hess(i, i);
    std::vector<VectorXd> kept;
    for (auto& u : lin.lowrank) {
      if (u.cwiseAbs2().dot(inv_diag) >= kDropTol) kept.push_back(std::move(u));
    }
    lin.lowrank = std::move(kept);
  }

  const BandedSpd* h_ = nullptr;
  Eigen::MatrixXd u_;
  Eigen::MatrixXd z_;
  Eigen::LLT<Eigen::MatrixXd> cap_;
};

double max_violation(const ConvexSubproblem& sub, const VectorXd& X) {
  const auto slacks = constraint_slacks(sub, X);
  double worst = -kInf;
  for (double s : slacks) worst = std::max(worst, -s);
  return slacks.empty() ? -kInf : worst;
}

constexpr double kRoundingRegion = 1e-3;
constexpr double kArmijo = 0.25;
constexpr double kCentral = 0.5;  // lambda^2 below which a warm start counts as central
constexpr int kMaxBacktracks = 60;

/// Rounding level of t * phi + barrier at X: at large t the Armijo decrease is smaller
/// than the error of evaluating the merit function itself.
double rounding_allowance(const ConvexSubproblem& sub, const VectorXd& X, double t, double F) {
  const double magnitude = std::abs(sub.linear_cost.dot(X)) +
                           0.5 * sub.proximal_weight * (X - sub.proximal_center).squaredNorm() +
                           0.5 * sub.proximal_weight * X.squaredNorm();
  return 1e-12 * (t * magnitude + std::abs(F) + 1.0);
}

}  // namespace

std::string to_string(InnerStatus s) {
  switch (s) {
    case InnerStatus::Optimal: return "optimal";
    case InnerStatus::MaxIters: return "max_iters";
    case InnerStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

std::size_t inequality_count(const ConvexSubproblem& sub) {
  return sub.horizontal.size() + 2 * sub.vertical.size() + 2 * sub.accel.size() + sub.ffr_distance.size() +
         sub.ffr_bounds.size() + sub.causality.size() + sub.sca.size() + sub.q_nonneg.size() +
         2 * sub.heading.size();
}

Phase1Result phase1_feasible(const ConvexSubproblem& sub, const VectorXd& hint, const InnerOptions& opts) {
  const std::size_t dim = sub.dimension();
  if (static_cast<std::size_t>(hint.size()) != dim) throw DomainError("hint has the wrong dimension");
  Phase1Result res;
  VectorXd X = hint;
  for (std::size_t k = 0; k < sub.n; ++k) {
    double& q = X[detail::var(k, detail::kQ)];
    if (!(q > 0.0)) q = 1e-3;
  }
  // Lift q onto each violated SCA row: 1/q^2 - e(q) is convex and decreasing in q, so
  // Newton from the left climbs monotonically to the root.
  detail::FormBuilder fb(sub);
  for (const auto& r : sub.sca) {
    const auto& e = r.expansion;
    if (!(e.coef_q > 0.0)) continue;
    const long k = static_cast<long>(r.k);
    const double u = fb.diff(k, detail::kX).eval(X);
    const double v = fb.diff(k, detail::kY).eval(X);
    double& q = X[detail::var(r.k, detail::kQ)];
    auto g = [&](double s) { return 1.0 / (s * s) - e(u, v, s); };
    if (g(q) <= 0.0) continue;
    double s = q;
    for (int it = 0; it < 100 && g(s) > 0.0; ++it) {
      const double slope = -2.0 / (s * s * s) - e.coef_q;
      s -= g(s) / slope;
    }
    if (std::isfinite(s) && s > q) q = s * (1.0 + 1e-6);
  }
  res.point = X;
  res.max_violation = max_violation(sub, X);
  if (res.max_violation <= -opts.strict_margin) {
    res.feasible = true;
    return res;
  }

  const double m = static_cast<double>(inequality_count(sub));
  const double gamma = opts.phase1_gamma;
  const double goal = -std::max(opts.strict_margin, 1e-6);
  double sigma = res.max_violation + std::max(1.0, 0.1 * std::abs(res.max_violation));
  double t = 1.0;
  auto merit = [&](const VectorXd& x, double sg, double weight) {
    const double b = barrier_terms(sub, x, sg, nullptr, true);
    if (!std::isfinite(b)) return kInf;
    return weight * (sg + 0.5 * gamma * (x - hint).squaredNorm()) + b;
  };

  bool done = false;
  while (!done) {
    for (int it = 0; it < 200; ++it) {
      if (res.iterations >= opts.max_newton) {
        done = true;
        break;
      }
      Linearization lin(dim);
      const double F = t * (sigma + 0.5 * gamma * (X - hint).squaredNorm()) +
                       barrier_terms(sub, X, sigma, &lin, true);
      lin.grad += t * gamma * (X - hint);
      lin.hess.add_diagonal(t * gamma);
      lin.sigma_grad += t;
      NewtonFactor nf;
      if (!nf.build(lin)) {
        done = true;
        break;
      }
      const VectorXd y1 = nf.solve(lin.grad);
      const VectorXd y2 = nf.solve(lin.border);
      const double denom = lin.sigma_hess - lin.border.dot(y2);
      if (!(denom > 0.0)) {
        done = true;
        break;
      }
      const double ds = (-lin.sigma_grad + lin.border.dot(y1)) / denom;
      const VectorXd dx = -y1 - y2 * ds;
      const double slope = lin.grad.dot(dx) + lin.sigma_grad * ds;
      const double lam2 = -slope;
      ++res.iterations;
      if (lam2 / 2.0 <= opts.newton_tol) break;
      double s = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < kMaxBacktracks; ++ls) {
        const double Fn = merit(X + s * dx, sigma + s * ds, t);
        if (std::isfinite(Fn) && Fn <= F + kArmijo * s * slope + 1e-12 * (std::abs(F) + 1.0)) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) break;
      X += s * dx;
      sigma += s * ds;
      if (sigma < goal) {
        done = true;
        break;
      }
    }
    if (done || m / t < 1e-12 || t > 1e14) break;
    t *= opts.barrier_growth;
  }
  res.point = X;
  res.max_violation = max_violation(sub, X);
  res.feasible = res.max_violation <= -opts.strict_margin;
  return res;
}

InnerSolution solve_convex(const ConvexSubproblem& sub, const VectorXd& warm_start, const InnerOptions& opts) {
  const std::size_t dim = sub.dimension();
  if (static_cast<std::size_t>(warm_start.size()) != dim) throw DomainError("warm start has the wrong dimension");
  InnerSolution sol;
  VectorXd X = warm_start;
  if (!std::isfinite(barrier_terms(sub, X, 0.0, nullptr, false))) {
    const Phase1Result p1 = phase1_feasible(sub, X, opts);
    sol.inner_iterations += p1.iterations;
    if (!p1.feasible) {
      sol.point = p1.point;
      sol.objective = subproblem_objective(sub, p1.point);
      sol.kkt_residual = kInf;
      sol.status = InnerStatus::Infeasible;
      return sol;
    }
    X = p1.point;
  }

  const double m = static_cast<double>(inequality_count(sub));
  double phi0 = 0.0;
  double grad_norm0 = 0.0;
  {
    Linearization lin(dim);
    phi0 = objective_terms(sub, X, 1.0, &lin);
    grad_norm0 = lin.grad.norm();
  }
  const double M = sub.proximal_weight;
  const double gap_tol = opts.gap_tol * (1.0 + std::abs(phi0));
  const double prox = 0.5 * M * (X - sub.proximal_center).squaredNorm();
  const double gap0 = std::max({0.1 * prox, std::min(grad_norm0 * grad_norm0 / (2.0 * M), 0.1 * (1.0 + std::abs(phi0))),
                                10.0 * gap_tol});
  double t = m > 0.0 ? m / gap0 : 1.0;

  // Resume further along the path when the start is already nearly central for a larger t.
  if (m > 0.0) {
    Linearization lo(dim), lb(dim);
    objective_terms(sub, X, 1.0, &lo);
    barrier_terms(sub, X, 0.0, &lb, false);
    const double gg = lo.grad.squaredNorm();
    const double tc = gg > 0.0 ? std::min(-lo.grad.dot(lb.grad) / gg, opts.barrier_growth * m / gap_tol) : 0.0;
    if (tc > t) {
      Linearization lin(dim);
      objective_terms(sub, X, tc, &lin);
      barrier_terms(sub, X, 0.0, &lin, false);
      NewtonFactor nf;
      if (nf.build(lin) && -lin.grad.dot(nf.solve(-lin.grad)) <= kCentral) t = tc;
    }
  }

  bool capped = false;
  double last_lam2 = 0.0;
  for (;;) {
    double prev_lam2 = kInf;
    for (;;) {
      if (sol.inner_iterations >= opts.max_newton) {
        capped = true;
        break;
      }
      Linearization lin(dim);
      const double F = t * objective_terms(sub, X, t, &lin) + barrier_terms(sub, X, 0.0, &lin, false);
      NewtonFactor nf;
      if (!nf.build(lin)) throw SolverError("Newton matrix is not positive definite");
      const VectorXd d = nf.solve(-lin.grad);
      const double slope = lin.grad.dot(d);
      const double lam2 = -slope;
      const double slack_F = rounding_allowance(sub, X, t, F);
      ++sol.inner_iterations;
      last_lam2 = lam2;
      if (!(lam2 / 2.0 > opts.newton_tol)) break;
      // Quadratic convergence has stopped: the decrement is at its rounding floor.
      if (lam2 < kRoundingRegion && lam2 > 0.25 * prev_lam2) break;
      prev_lam2 = lam2;
      double s = 1.0;
      bool accepted = false;
      VectorXd Xn;
      for (int ls = 0; ls < kMaxBacktracks; ++ls) {
        Xn = X + s * d;
        const double b = barrier_terms(sub, Xn, 0.0, nullptr, false);
        if (std::isfinite(b) && t * subproblem_objective(sub, Xn) + b <= F + kArmijo * s * slope + slack_F) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) break;
      X = Xn;
    }
    ++sol.stages;
    if (capped || m == 0.0 || m / t <= gap_tol) break;
    t *= opts.barrier_growth;
  }

  // Bound on phi(X) - phi*: central-path gap plus the Newton estimate of the distance
  // to the central point, both relative to the objective scale.
  const double phi = subproblem_objective(sub, X);
  sol.point = X;
  sol.objective = phi;
  sol.kkt_residual = (m + 0.5 * last_lam2) / (t * (1.0 + std::abs(phi)));
  sol.status = (!capped && sol.kkt_residual <= opts.kkt_tol) ? InnerStatus::Optimal : InnerStatus::MaxIters;
  return sol;
}

}  // namespace covert
