#include "covert_pursuit/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "covert_pursuit/errors.hpp"

namespace covert {

void ScenarioConfig::validate() const {
  if (!(delta > 0.0)) throw DomainError("delta must be strictly positive");
  if (n_slots == 0) throw DomainError("n_slots must be at least 1");
  if (std::abs(static_cast<double>(n_slots) * delta - horizon_T) > 1e-9 * std::max(1.0, horizon_T)) {
    throw DomainError("n_slots * delta must equal horizon_T");
  }
  if (!(v_hm > 0.0) || !(v_vm > 0.0)) throw DomainError("speed limits must be strictly positive");
  if (!(target_alt_H < z_lower)) throw DomainError("z_lower must exceed the target altitude H");
  if (!(z_lower <= monitor_z0)) throw DomainError("monitor_z0 must not be below z_lower");
  if (!(d_max > z_lower - target_alt_H)) {
    throw DomainError("d_max must exceed the vertical separation z_lower - H");
  }
  if (!(eta0 > 0.0 && eta0 <= 1.0)) throw DomainError("eta0 must lie in (0,1]");
  if (!(mu1 >= 0.0) || !(mu2 >= 0.0)) throw DomainError("disguise weights must be nonnegative");
  if (!(e0 >= 0.0)) throw DomainError("e0 must be nonnegative");
  if (!(c3 >= 0.0)) throw DomainError("c3 must be nonnegative");
  if (!(target_v_max > 0.0)) throw DomainError("target_v_max must be strictly positive");
  propulsion.validate();
  thrust.validate();
  solar.validate();
  if (solar_fit.n_samples < 2) throw DomainError("solar fit needs at least two samples");
}

double TrajectoryPlan::horizontal_step(std::size_t t) const {
  const Waypoint& a = waypoints[t];
  const Waypoint& b = waypoints[t - 1];
  return std::hypot(a.x - b.x, a.y - b.y);
}

double TrajectoryPlan::vertical_step(std::size_t t) const {
  return waypoints[t].z - waypoints[t - 1].z;
}

TargetTrack generate_target_track(const ScenarioConfig& cfg) {
  TargetTrack track;
  track.waypoints.reserve(cfg.n_slots + 1);
  for (std::size_t t = 0; t <= cfg.n_slots; ++t) {
    const double elapsed = static_cast<double>(t) * cfg.delta;
    track.waypoints.push_back({10.0 * elapsed, 100.0 * std::sin(elapsed / 5.0)});
  }
  return track;
}

namespace {

double parse_double(std::string_view field, std::size_t line, const char* name) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first != last && *first == ' ') ++first;
  while (last != first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError("line " + std::to_string(line) + ": malformed " + name + " value '" +
                         std::string(field) + "'",
                     line);
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

TargetTrack load_target_track(const std::string& path, std::optional<std::size_t> expected_points) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open target track '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  TargetTrack track;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "t,a,b") {
        throw ParseError("line " + std::to_string(line_no) + ": expected header 't,a,b'", line_no);
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_commas(line);
    if (fields.size() != 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    const double t_value = parse_double(fields[0], line_no, "t");
    const double slot = static_cast<double>(track.waypoints.size());
    if (t_value != std::floor(t_value) || t_value < 0.0) {
      throw ParseError("line " + std::to_string(line_no) + ": slot index must be a nonnegative integer",
                       line_no);
    }
    if (t_value > slot) {
      throw ParseError("line " + std::to_string(line_no) + ": missing slot " +
                           std::to_string(track.waypoints.size()),
                       line_no);
    }
    if (t_value < slot) {
      throw ParseError("line " + std::to_string(line_no) + ": slot index " +
                           std::to_string(static_cast<long long>(t_value)) + " is not increasing",
                       line_no);
    }
    track.waypoints.push_back({parse_double(fields[1], line_no, "a"), parse_double(fields[2], line_no, "b")});
  }
  if (track.waypoints.empty()) throw ParseError("target track '" + path + "' has no waypoints");
  if (expected_points && track.waypoints.size() != *expected_points) {
    throw ParseError("target track has " + std::to_string(track.waypoints.size()) +
                     " waypoints, expected " + std::to_string(*expected_points));
  }
  return track;
}

void save_target_track(const std::string& path, const TargetTrack& track) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write target track '" + path + "'");
  out << "t,a,b\n";
  char buf[96];
  for (std::size_t t = 0; t < track.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t, track[t].a, track[t].b);
    out << buf;
  }
}

void validate_track(const TargetTrack& track, const ScenarioConfig& cfg) {
  if (track.size() != cfg.n_slots + 1) {
    throw DomainError("target track has " + std::to_string(track.size()) + " points, expected " +
                      std::to_string(cfg.n_slots + 1));
  }
  const double bound = cfg.target_v_max * cfg.delta * (1.0 + 1e-12);
  for (std::size_t t = 1; t < track.size(); ++t) {
    const double step = std::hypot(track[t].a - track[t - 1].a, track[t].b - track[t - 1].b);
    if (step > bound) {
      throw DomainError("target step at slot " + std::to_string(t) + " exceeds target_v_max");
    }
  }
}

double horizontal_distance(const Waypoint& m, const TargetPoint& tgt) {
  return std::hypot(m.x - tgt.a, m.y - tgt.b);
}

double distance_3d(const Waypoint& m, const TargetPoint& tgt, double target_alt) {
  const double dx = m.x - tgt.a;
  const double dy = m.y - tgt.b;
  const double dz = m.z - target_alt;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool in_ffr(const Waypoint& monitor, const TargetPoint& target, const ScenarioConfig& cfg) {
  const double dx = monitor.x - target.a;
  const double dy = monitor.y - target.b;
  const double dz = monitor.z - cfg.target_alt_H;
  return dx * dx + dy * dy + dz * dz <= cfg.d_max * cfg.d_max && monitor.x <= target.a &&
         monitor.y <= target.b && monitor.z >= cfg.z_lower;
}

std::vector<MobilityViolation> audit_mobility(const TrajectoryPlan& plan, const ScenarioConfig& cfg,
                                              double tol) {
  if (plan.waypoints.size() != cfg.n_slots + 1 || plan.q.size() != cfg.n_slots) {
    throw DomainError("plan length does not match n_slots");
  }
  std::vector<MobilityViolation> out;
  const double h_reach = cfg.horizontal_reach();
  const double v_reach = cfg.vertical_reach();
  for (std::size_t t = 1; t <= cfg.n_slots; ++t) {
    const double h = plan.horizontal_step(t);
    if (h > h_reach + tol) out.push_back({t, "horizontal_speed", h - h_reach});
    const double dz = plan.vertical_step(t);
    if (std::abs(dz) > v_reach + tol) out.push_back({t, "vertical_speed", std::abs(dz) - v_reach});
    if (t >= 2) {
      const double accel = std::abs(dz - plan.vertical_step(t - 1));
      if (accel > v_reach + tol) out.push_back({t, "vertical_accel", accel - v_reach});
    }
  }
  return out;
}

std::vector<double> disguise_metric(const TrajectoryPlan& plan, const TargetTrack& track,
                                    double mu1, double mu2) {
  if (track.size() < plan.waypoints.size()) throw DomainError("track shorter than plan");
  std::vector<double> f(plan.n_slots());
  for (std::size_t t = 1; t <= plan.n_slots(); ++t) {
    const Waypoint& w = plan.waypoints[t];
    const double dx = w.x - track[t].a;
    const double dy = w.y - track[t].b;
    const double dz = plan.vertical_step(t);
    f[t - 1] = mu1 * (dx * dx + dy * dy) + mu2 * dz * dz;
  }
  return f;
}

void tighten_q(TrajectoryPlan& plan, const ScenarioConfig& cfg) {
  for (std::size_t t = 1; t <= plan.n_slots(); ++t) {
    plan.q[t - 1] = solve_q_exact(plan.horizontal_step(t) / cfg.delta, cfg.propulsion.v0);
  }
}

TrajectoryPlan initial_plan(const TargetTrack& track, const ScenarioConfig& cfg) {
  cfg.validate();
  if (track.size() != cfg.n_slots + 1) throw DomainError("track length does not match n_slots");
  TrajectoryPlan plan;
  plan.waypoints.resize(cfg.n_slots + 1);
  plan.q.resize(cfg.n_slots);
  plan.waypoints[0] = {0.0, 0.0, cfg.monitor_z0};
  for (std::size_t t = 1; t <= cfg.n_slots; ++t) {
    plan.waypoints[t] = {track[t].a, track[t].b, cfg.monitor_z0};
  }
  tighten_q(plan, cfg);
  const auto violations = audit_mobility(plan, cfg);
  if (!violations.empty()) {
    throw InfeasibleError("shadow plan violates " + violations.front().constraint + " at slot " +
                          std::to_string(violations.front().slot));
  }
  for (std::size_t t = 1; t <= cfg.n_slots; ++t) {
    if (!in_ffr(plan.waypoints[t], track[t], cfg)) {
      throw InfeasibleError("shadow plan leaves the feasible flight region at slot " +
                            std::to_string(t));
    }
  }
  return plan;
}

}  // namespace covert
