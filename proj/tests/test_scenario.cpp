#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "covert_pursuit/errors.hpp"
#include "covert_pursuit/scenario.hpp"

using namespace covert;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("covert_scenario_" + name);
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST_CASE("default configuration is the reference mission") {
  const ScenarioConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.n_slots == 150);
  CHECK(cfg.horizontal_reach() == doctest::Approx(6.0));
  CHECK(cfg.vertical_reach() == doctest::Approx(1.6));
  CHECK(cfg.energy_budget() == doctest::Approx(225000.0));
}

TEST_CASE("configuration invariants are enforced") {
  ScenarioConfig cfg;
  cfg.n_slots = 149;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = ScenarioConfig{};
  cfg.z_lower = 99.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = ScenarioConfig{};
  cfg.d_max = 0.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = ScenarioConfig{};
  cfg.mu1 = -0.1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = ScenarioConfig{};
  cfg.monitor_z0 = 100.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("generated target track") {
  const ScenarioConfig cfg;
  const TargetTrack track = generate_target_track(cfg);
  REQUIRE(track.size() == 151);
  CHECK(track[0].a == 0.0);
  CHECK(track[0].b == 0.0);
  CHECK(track[150].a == doctest::Approx(300.0));
  CHECK(track[150].b == doctest::Approx(-27.941549819892587).epsilon(1e-12));
  double fastest = 0.0;
  for (std::size_t t = 1; t < track.size(); ++t) {
    fastest = std::max(fastest, std::hypot(track[t].a - track[t - 1].a, track[t].b - track[t - 1].b));
  }
  CHECK(fastest == doctest::Approx(4.4718929102964).epsilon(1e-11));
  CHECK_NOTHROW(validate_track(track, cfg));
}

TEST_CASE("track validation") {
  ScenarioConfig cfg;
  TargetTrack track = generate_target_track(cfg);
  track.waypoints.pop_back();
  CHECK_THROWS_AS(validate_track(track, cfg), DomainError);
  track = generate_target_track(cfg);
  track.waypoints[10].a += 50.0;
  CHECK_THROWS_AS(validate_track(track, cfg), DomainError);
}

TEST_CASE("track files round-trip exactly") {
  const ScenarioConfig cfg;
  const TargetTrack track = generate_target_track(cfg);
  const auto path = (std::filesystem::temp_directory_path() / "covert_scenario_roundtrip.csv").string();
  save_target_track(path, track);
  const TargetTrack back = load_target_track(path, 151);
  REQUIRE(back.size() == track.size());
  for (std::size_t t = 0; t < track.size(); ++t) {
    CHECK(back[t].a == track[t].a);
    CHECK(back[t].b == track[t].b);
  }
  CHECK_THROWS_AS(load_target_track(path, 10), ParseError);
}

TEST_CASE("malformed track files name the offending line") {
  auto line_of = [](const std::string& path) {
    try {
      load_target_track(path);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of(temp_file("header.csv", "t,x,y\n0,0,0\n")) == 1);
  CHECK(line_of(temp_file("fields.csv", "t,a,b\n0,0,0\n1,2\n")) == 3);
  CHECK(line_of(temp_file("number.csv", "t,a,b\n0,0,0\n1,abc,0\n")) == 3);
  CHECK(line_of(temp_file("gap.csv", "t,a,b\n0,0,0\n2,0,0\n")) == 3);
  CHECK(line_of(temp_file("repeat.csv", "t,a,b\n0,0,0\n0,1,0\n")) == 3);
  CHECK_THROWS_AS(load_target_track(temp_file("empty.csv", "t,a,b\n")), ParseError);
  CHECK_THROWS_AS(load_target_track("/nonexistent/track.csv"), ParseError);
}

TEST_CASE("flight region membership is inclusive") {
  const ScenarioConfig cfg;
  const TargetPoint tgt{50.0, 20.0};
  CHECK(in_ffr({50.0, 20.0, 101.0}, tgt, cfg));
  CHECK(in_ffr({50.0, 20.0 - std::sqrt(400.0 - 1.0), 101.0}, tgt, cfg));
  CHECK_FALSE(in_ffr({50.1, 20.0, 101.0}, tgt, cfg));
  CHECK_FALSE(in_ffr({50.0, 20.1, 101.0}, tgt, cfg));
  CHECK_FALSE(in_ffr({50.0, 20.0, 100.9}, tgt, cfg));
  CHECK_FALSE(in_ffr({30.0, 5.0, 101.0}, tgt, cfg));
  CHECK(distance_3d({50.0, 17.0, 104.0}, tgt, 100.0) == doctest::Approx(5.0));
}

TEST_CASE("shadow initialization") {
  const ScenarioConfig cfg;
  const TargetTrack track = generate_target_track(cfg);
  const TrajectoryPlan plan = initial_plan(track, cfg);
  REQUIRE(plan.waypoints.size() == 151);
  REQUIRE(plan.q.size() == 150);
  CHECK(audit_mobility(plan, cfg).empty());
  for (std::size_t t = 1; t <= 150; ++t) {
    CHECK(in_ffr(plan.waypoints[t], track[t], cfg));
    CHECK(plan.q[t - 1] == solve_q_exact(plan.horizontal_step(t) / cfg.delta, cfg.propulsion.v0));
  }
  ScenarioConfig slow = cfg;
  slow.v_hm = 10.0;
  CHECK_THROWS_AS(initial_plan(track, slow), InfeasibleError);
}

TEST_CASE("mobility audit reports every violated bound") {
  ScenarioConfig cfg;
  cfg.n_slots = 3;
  cfg.horizon_T = 0.6;
  TrajectoryPlan plan;
  plan.waypoints = {{0, 0, 102}, {7, 0, 102}, {7, 0, 103.5}, {7, 0, 102.0}};
  plan.q.assign(3, 1.0);
  const auto v = audit_mobility(plan, cfg);
  REQUIRE(v.size() == 2);
  CHECK(v[0].slot == 1);
  CHECK(v[0].constraint == "horizontal_speed");
  CHECK(v[0].magnitude == doctest::Approx(1.0));
  CHECK(v[1].slot == 3);
  CHECK(v[1].constraint == "vertical_accel");
  CHECK(v[1].magnitude == doctest::Approx(1.4));
}

TEST_CASE("disguise metric") {
  ScenarioConfig cfg;
  cfg.n_slots = 2;
  cfg.horizon_T = 0.4;
  TargetTrack track;
  track.waypoints = {{0, 0}, {3, 4}, {6, 8}};
  TrajectoryPlan plan;
  plan.waypoints = {{0, 0, 102}, {0, 0, 103}, {6, 8, 103}};
  plan.q.assign(2, 1.0);
  const auto f = disguise_metric(plan, track, 0.2, 0.1);
  REQUIRE(f.size() == 2);
  CHECK(f[0] == doctest::Approx(0.2 * 25.0 + 0.1 * 1.0));
  CHECK(f[1] == doctest::Approx(0.0));
}

TEST_CASE("stationary target yields a hover plan") {
  ScenarioConfig cfg;
  cfg.n_slots = 5;
  cfg.horizon_T = 1.0;
  TargetTrack track;
  track.waypoints.assign(6, TargetPoint{0.0, 0.0});
  const TrajectoryPlan plan = initial_plan(track, cfg);
  for (std::size_t t = 1; t <= 5; ++t) {
    CHECK(plan.waypoints[t].x == 0.0);
    CHECK(plan.waypoints[t].y == 0.0);
    CHECK(plan.waypoints[t].z == cfg.monitor_z0);
    CHECK(plan.q[t - 1] == 1.0);
  }
}

TEST_CASE("flight region grows with the distance bound") {
  ScenarioConfig cfg;
  const TargetPoint tgt{0.0, 0.0};
  const Waypoint w{-10.0, -12.0, 105.0};
  // Sixteen and a bit metres away in 3D.
  cfg.d_max = 16.0;
  CHECK_FALSE(in_ffr(w, tgt, cfg));
  for (double d : {16.5, 20.0, 100.0}) {
    cfg.d_max = d;
    CHECK(in_ffr(w, tgt, cfg));
  }
}

TEST_CASE("disguise vanishes with zero weights or a coincident monitor") {
  const ScenarioConfig cfg;
  const TargetTrack track = generate_target_track(cfg);
  const TrajectoryPlan shadow = initial_plan(track, cfg);
  for (double f : disguise_metric(shadow, track, 0.0, 0.0)) CHECK(f == 0.0);
  for (double f : disguise_metric(shadow, track, cfg)) CHECK(f == 0.0);
  TrajectoryPlan moved = shadow;
  for (auto& w : moved.waypoints) w.x -= 1.0;
  for (double f : disguise_metric(moved, track, cfg)) CHECK(f > 0.0);
}
