#include "covert_pursuit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covert_pursuit/errors.hpp"

namespace covert {

namespace {

constexpr double kTol = 1e-9;

double horizontal_radius(const ScenarioConfig& cfg) {
  const double floor_gap = cfg.z_lower - cfg.target_alt_H;
  return std::sqrt(std::max(0.0, cfg.d_max * cfg.d_max - floor_gap * floor_gap));
}

double axis_count(double span, double h) { return std::floor(span / h + kTol) + 1.0; }

class LatticeSearch {
 public:
  LatticeSearch(const TargetTrack& track, const ScenarioConfig& cfg, double h)
      : track_(track), cfg_(cfg), h_(h), origin_{0.0, 0.0, cfg.monitor_z0} {
    path_.resize(cfg.n_slots + 1);
    path_[0] = origin_;
  }

  void run() { descend(1, 0.0, 0.0, 0.0); }

  double best() const { return best_; }
  const std::vector<Waypoint>& best_path() const { return best_path_; }
  std::uint64_t leaves() const { return leaves_; }

 private:
  // Lattice indices i with lo <= origin + i h <= hi.
  static std::pair<long, long> index_range(double origin, double lo, double hi, double h) {
    return {static_cast<long>(std::ceil((lo - origin) / h - kTol)),
            static_cast<long>(std::floor((hi - origin) / h + kTol))};
  }

  void descend(std::size_t t, double value, double cumulative, double dz_prev) {
    if (t > cfg_.n_slots) {
      ++leaves_;
      if (value < best_) {
        best_ = value;
        best_path_ = path_;
      }
      return;
    }
    const Waypoint& prev = path_[t - 1];
    const TargetPoint& tgt = track_[t];
    const double R = cfg_.horizontal_reach();
    const double V = cfg_.vertical_reach();
    const double Dh = horizontal_radius(cfg_);
    const double W = cfg_.thrust.weight_force();
    const double budget = cfg_.energy_budget();

    const auto [i0, i1] = index_range(origin_.x, std::max(tgt.a - Dh, prev.x - R), std::min(tgt.a, prev.x + R), h_);
    const auto [j0, j1] = index_range(origin_.y, std::max(tgt.b - Dh, prev.y - R), std::min(tgt.b, prev.y + R), h_);
    double z_lo = std::max(cfg_.z_lower, prev.z - V);
    double z_hi = std::min(cfg_.target_alt_H + cfg_.d_max, prev.z + V);
    if (t >= 2) {
      z_lo = std::max(z_lo, prev.z + dz_prev - V);
      z_hi = std::min(z_hi, prev.z + dz_prev + V);
    }
    const auto [k0, k1] = index_range(origin_.z, z_lo, z_hi, h_);

    for (long i = i0; i <= i1; ++i) {
      const double x = origin_.x + static_cast<double>(i) * h_;
      for (long j = j0; j <= j1; ++j) {
        const double y = origin_.y + static_cast<double>(j) * h_;
        const double step = std::hypot(x - prev.x, y - prev.y);
        if (step > R + kTol) continue;
        const double ph = propulsion_power_exact(step / cfg_.delta, cfg_.propulsion);
        const double d2sq = (x - tgt.a) * (x - tgt.a) + (y - tgt.b) * (y - tgt.b);
        for (long k = k0; k <= k1; ++k) {
          const double z = origin_.z + static_cast<double>(k) * h_;
          const double dh = z - cfg_.target_alt_H;
          if (d2sq + dh * dh > cfg_.d_max * cfg_.d_max + kTol) continue;
          const double dz = z - prev.z;
          const double pv = W * dz / cfg_.delta;
          const double cum = cumulative + ph + pv - solar_power_exact(z, cfg_.solar);
          if (cum > budget) continue;
          path_[t] = {x, y, z};
          descend(t + 1, value + ph + pv - cfg_.mu1 * d2sq - cfg_.mu2 * dz * dz, cum, dz);
        }
      }
    }
  }

  const TargetTrack& track_;
  const ScenarioConfig& cfg_;
  double h_;
  Waypoint origin_;
  std::vector<Waypoint> path_;
  double best_ = std::numeric_limits<double>::infinity();
  std::vector<Waypoint> best_path_;
  std::uint64_t leaves_ = 0;
};

}  // namespace

GridEstimate estimate_grid(const TargetTrack& track, const ScenarioConfig& cfg, double grid_step) {
  if (!(grid_step > 0.0)) throw DomainError("grid step must be positive");
  validate_track(track, cfg);
  const double Dh = horizontal_radius(cfg);
  const double nxy = std::min(axis_count(Dh, grid_step), 2.0 * std::floor(cfg.horizontal_reach() / grid_step + kTol) + 1.0);
  const double nz = std::min(axis_count(cfg.target_alt_H + cfg.d_max - cfg.z_lower, grid_step),
                             2.0 * std::floor(cfg.vertical_reach() / grid_step + kTol) + 1.0);
  GridEstimate e;
  e.evaluations = 1.0;
  for (std::size_t t = 1; t <= cfg.n_slots; ++t) {
    e.per_slot.push_back(nxy * nxy * nz);
    e.evaluations *= nxy * nxy * nz;
  }
  return e;
}

BruteForceResult brute_force_small(const TargetTrack& track, const ScenarioConfig& cfg, double grid_step,
                                   double max_evaluations) {
  cfg.validate();
  if (cfg.n_slots > 3) throw DomainError("brute force is limited to N <= 3");
  BruteForceResult res;
  res.grid_step = grid_step;
  res.estimate = estimate_grid(track, cfg, grid_step);
  if (res.estimate.evaluations > max_evaluations) {
    std::ostringstream os;
    os << "grid too large: about " << res.estimate.evaluations << " evaluations (limit " << max_evaluations << ")";
    throw DomainError(os.str());
  }
  LatticeSearch search(track, cfg, grid_step);
  search.run();
  res.leaves = search.leaves();
  if (search.best_path().empty()) throw InfeasibleError("no lattice plan satisfies the constraints");
  res.objective = search.best();
  res.plan.waypoints = search.best_path();
  res.plan.q.resize(cfg.n_slots);
  tighten_q(res.plan, cfg);
  return res;
}

double plan_objective_exact(const TrajectoryPlan& plan, const TargetTrack& track, const ScenarioConfig& cfg) {
  const double W = cfg.thrust.weight_force();
  double value = 0.0;
  for (std::size_t t = 1; t <= plan.n_slots(); ++t) {
    const Waypoint& w = plan.waypoints[t];
    const double dz = w.z - plan.waypoints[t - 1].z;
    const double step = std::hypot(w.x - plan.waypoints[t - 1].x, w.y - plan.waypoints[t - 1].y);
    const double d2sq = (w.x - track[t].a) * (w.x - track[t].a) + (w.y - track[t].b) * (w.y - track[t].b);
    value += propulsion_power_exact(step / cfg.delta, cfg.propulsion) + W * dz / cfg.delta - cfg.mu1 * d2sq -
             cfg.mu2 * dz * dz;
  }
  return value;
}

double objective_lipschitz_bound(const ScenarioConfig& cfg) {
  // Largest |dP_h/dv| on [0, v_hm], sampled with central differences.
  const int samples = 3000;
  const double hv = 1e-4;
  double slope = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double v = cfg.v_hm * i / samples;
    const double lo = std::max(0.0, v - hv);
    const double hi = v + hv;
    slope = std::max(slope, std::abs(propulsion_power_exact(hi, cfg.propulsion) -
                                     propulsion_power_exact(lo, cfg.propulsion)) / (hi - lo));
  }
  const double Dh = horizontal_radius(cfg);
  const double V = cfg.vertical_reach();
  double sum = 0.0;
  for (std::size_t t = 1; t <= cfg.n_slots; ++t) {
    const double share = t < cfg.n_slots ? 2.0 : 1.0;
    const double gxy = share * slope / cfg.delta + 2.0 * cfg.mu1 * Dh;
    double gz = share * 2.0 * cfg.mu2 * V;
    if (t == cfg.n_slots) gz += cfg.thrust.weight_force() / cfg.delta;
    sum += gxy * gxy + gz * gz;
  }
  return std::sqrt(sum);
}

double grid_cell_band(const ScenarioConfig& cfg, double grid_step) {
  return objective_lipschitz_bound(cfg) * grid_step * std::sqrt(3.0 * static_cast<double>(cfg.n_slots)) / 2.0;
}

Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                     const Eigen::VectorXd& point, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  Eigen::VectorXd g(point.size());
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = fn(x);
    x[i] = orig - h;
    const double down = fn(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace covert
