#include "covert_pursuit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "covert_pursuit/errors.hpp"
#include "covert_pursuit/online_mpc.hpp"
#include "covert_pursuit/oracle.hpp"

namespace covert {

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt(double v, int digits = 9) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

struct Loaded {
  RunConfig config;
  TargetTrack track;
};

Loaded load(const std::string& config_path) {
  Loaded l;
  l.config = load_run_config(config_path);
  const auto dir = std::filesystem::path(config_path).parent_path();
  l.track = resolve_track(l.config, dir.empty() ? "." : dir.string());
  return l;
}

void check_scheme(const std::string& scheme) {
  const auto names = all_schemes();
  if (std::find(names.begin(), names.end(), scheme) == names.end()) {
    throw UsageError("unknown scheme '" + scheme + "'");
  }
}

void write_timing(const std::string& dir, const std::string& stem, double seconds) {
  ojson j;
  j["wall_time_s"] = seconds;
  atomic_write((std::filesystem::path(dir) / (stem + "_timing.json")).string(), j.dump(2) + "\n");
}

}  // namespace

std::vector<std::string> all_schemes() {
  return {"proposed", "dko", "aco", "ndp", "dst", "mdr", "online"};
}

RunReport run_scheme(const RunConfig& config, const std::string& scheme, const TargetTrack& track) {
  check_scheme(scheme);
  RunReport report;
  if (scheme == "online") {
    report = run_online(track, config.scenario, config.online);
  } else {
    SolverOptions opts = config.solver;
    opts.scheme = parse_scheme(scheme);
    report = solve_offline(track, config.scenario, opts);
  }
  report.config_json = to_json(config);
  return report;
}

int exit_code_for_current_exception(std::string& message) {
  try {
    throw;
  } catch (const UsageError& e) {
    message = e.what();
    return kExitUsage;
  } catch (const ParseError& e) {
    message = e.what();
    return kExitUsage;
  } catch (const DomainError& e) {
    message = e.what();
    return kExitUsage;
  } catch (const InfeasibleError& e) {
    message = e.what();
    return kExitInfeasible;
  } catch (const SolverError& e) {
    message = e.what();
    return kExitNonConvergence;
  } catch (const MonotonicityError& e) {
    message = e.what();
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    message = e.what();
    return 1;
  }
}

SchemeOutcome run_guarded(const RunConfig& config, const std::string& scheme, const TargetTrack& track) {
  SchemeOutcome o;
  o.scheme = scheme;
  try {
    o.report = run_scheme(config, scheme, track);
    o.exit_code = o.report->converged ? kExitOk : kExitNonConvergence;
  } catch (...) {
    o.exit_code = exit_code_for_current_exception(o.error);
  }
  return o;
}

std::size_t worker_limit(std::size_t jobs) {
  std::size_t limit = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COVERT_PURSUIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw UsageError("COVERT_PURSUIT_THREADS must be a positive integer");
    }
    limit = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(limit, jobs));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers = worker_limit(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

std::vector<SchemeOutcome> run_schemes(const RunConfig& config, const TargetTrack& track,
                                       const std::vector<std::string>& schemes) {
  if (schemes.empty()) throw UsageError("no schemes given");
  for (const auto& s : schemes) check_scheme(s);
  std::vector<SchemeOutcome> out(schemes.size());
  parallel_for(schemes.size(), [&](std::size_t i) { out[i] = run_guarded(config, schemes[i], track); });

  const auto dst = std::find_if(out.begin(), out.end(),
                                [](const SchemeOutcome& o) { return o.scheme == "dst" && o.report; });
  if (dst != out.end()) {
    const double baseline = dst->report->energy.consumed_J;
    for (auto& o : out) {
      if (!o.report || o.scheme == "dst") continue;
      o.report->energy.saved_vs_baseline_J = baseline - o.report->energy.consumed_J;
      o.report->energy.baseline = "dst";
    }
  }
  return out;
}

std::vector<ComparisonRow> comparison_rows(const std::vector<SchemeOutcome>& outcomes) {
  std::vector<ComparisonRow> rows;
  for (const auto& o : outcomes) {
    ComparisonRow r;
    r.scheme = o.scheme;
    r.exit_code = o.exit_code;
    r.error = o.error;
    if (o.report) {
      const RunReport& rep = *o.report;
      r.status = rep.status;
      r.common_objective_J = rep.common_objective;
      r.objective_J = rep.objective_exact_scaled;
      r.energy_J = rep.energy.consumed_J;
      r.harvested_J = rep.energy.harvested_J;
      r.disguise_total = rep.disguise_total;
      r.max_d3 = rep.audit.max_d3;
      r.iterations = rep.ticks.empty() ? rep.iterations.size() : rep.ticks.size();
      r.audit_ok = rep.audit.ok;
      r.saved_vs_dst_J = rep.energy.saved_vs_baseline_J;
    } else {
      r.status = o.exit_code == kExitInfeasible ? "infeasible" : "failed";
    }
    rows.push_back(r);
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "scheme,status,exit_code,common_objective_J,objective_J,energy_J,harvested_J,disguise_total,max_d3,"
        "iterations,audit_ok,saved_vs_dst_J,error\n";
  for (const auto& r : rows) {
    os << r.scheme << ',' << r.status << ',' << r.exit_code << ',' << fmt(r.common_objective_J) << ','
       << fmt(r.objective_J) << ',' << fmt(r.energy_J) << ',' << fmt(r.harvested_J) << ','
       << fmt(r.disguise_total) << ',' << fmt(r.max_d3) << ',' << r.iterations << ',' << (r.audit_ok ? 1 : 0)
       << ',' << (r.saved_vs_dst_J ? fmt(*r.saved_vs_dst_J) : std::string()) << ',' << csv_text(r.error) << '\n';
  }
  return os.str();
}

std::vector<double> pareto_grid(std::size_t points) {
  if (points == 0) throw UsageError("the weight grid needs at least one point");
  std::vector<double> g(points, 0.0);
  for (std::size_t i = 1; i < points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

std::vector<ParetoPoint> pareto_sweep(const RunConfig& config, const TargetTrack& track,
                                      const std::vector<double>& mu1_grid, int continuation_passes) {
  if (mu1_grid.empty()) throw UsageError("the weight grid needs at least one point");
  const std::size_t n = mu1_grid.size();
  std::vector<RunConfig> configs(n, config);
  for (std::size_t i = 0; i < n; ++i) {
    configs[i].scenario.mu1 = mu1_grid[i];
    configs[i].scenario.mu2 = 1.0 - mu1_grid[i];
  }
  std::vector<ParetoPoint> out(n);
  std::vector<std::optional<RunReport>> best(n);
  parallel_for(n, [&](std::size_t i) {
    SchemeOutcome o = run_guarded(configs[i], "proposed", track);
    out[i].start = "shadow";
    if (o.report) {
      best[i] = std::move(o.report);
    } else {
      out[i].status = o.exit_code == kExitInfeasible ? "infeasible" : "failed";
      out[i].error = o.error;
    }
  });

  for (int pass = 0; pass < continuation_passes; ++pass) {
    const std::vector<std::optional<RunReport>> seeds = best;
    std::vector<std::optional<RunReport>> candidate(n);
    std::vector<std::string> origin(n);
    parallel_for(n, [&](std::size_t i) {
      if (!seeds[i]) return;
      for (std::size_t j : {i - 1, i + 1}) {
        if (j >= n || !seeds[j]) continue;
        SolverOptions opts = configs[i].solver;
        opts.scheme = Scheme::Proposed;
        try {
          RunReport r = solve_offline(track, configs[i].scenario, opts, seeds[j]->plan);
          const RunReport& incumbent = candidate[i] ? *candidate[i] : *seeds[i];
          if (r.objective_exact < incumbent.objective_exact - 1e-9 * (1.0 + std::abs(incumbent.objective_exact))) {
            candidate[i] = std::move(r);
            origin[i] = "mu1=" + fmt(mu1_grid[j], 6);
          }
        } catch (const std::exception&) {
          // A failed continuation solve leaves the point as it was.
        }
      }
    });
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!candidate[i]) continue;
      best[i] = std::move(candidate[i]);
      out[i].start = origin[i];
      improved = true;
    }
    if (!improved) break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    ParetoPoint& p = out[i];
    p.mu1 = configs[i].scenario.mu1;
    p.mu2 = configs[i].scenario.mu2;
    if (!best[i]) continue;
    const RunReport& r = *best[i];
    p.power_W = r.energy.average_power_W;
    p.energy_J = r.energy.consumed_J;
    p.disguise = r.disguise_total;
    p.objective_J = r.objective_exact_scaled;
    p.converged = r.converged;
    p.status = r.status;
  }
  return out;
}

std::string pareto_csv(const std::vector<ParetoPoint>& points) {
  std::ostringstream os;
  os << "mu1,mu2,power_W,energy_J,disguise,objective_J,converged,status,start,error\n";
  for (const auto& p : points) {
    os << fmt(p.mu1) << ',' << fmt(p.mu2) << ',' << fmt(p.power_W) << ',' << fmt(p.energy_J) << ','
       << fmt(p.disguise) << ',' << fmt(p.objective_J) << ',' << (p.converged ? 1 : 0) << ',' << p.status << ','
       << p.start << ',' << csv_text(p.error) << '\n';
  }
  return os.str();
}

double pareto_saturation_ratio(const std::vector<ParetoPoint>& points) {
  std::vector<const ParetoPoint*> ok;
  for (const auto& p : points) {
    if (p.error.empty()) ok.push_back(&p);
  }
  if (ok.size() < 2) return 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* p : ok) {
    lo = std::min(lo, p->power_W);
    hi = std::max(hi, p->power_W);
  }
  if (!(hi > lo)) return 0.0;
  std::stable_sort(ok.begin(), ok.end(), [](const ParetoPoint* a, const ParetoPoint* b) {
    return a->disguise > b->disguise;
  });
  return std::abs(ok[0]->power_W - ok[1]->power_W) / (hi - lo);
}

int run_command(const std::string& config_path, const std::string& scheme, const std::string& out_dir,
                std::ostream& out) {
  Loaded l;
  try {
    l = load(config_path);
    check_scheme(scheme);
  } catch (...) {
    std::string msg;
    const int code = exit_code_for_current_exception(msg);
    std::cerr << "error: " << msg << '\n';
    return code == kExitOk ? kExitUsage : code;
  }
  const SchemeOutcome o = run_guarded(l.config, scheme, l.track);
  if (!o.report) {
    std::cerr << "error: " << scheme << ": " << o.error << '\n';
    return o.exit_code;
  }
  const RunReport& r = *o.report;
  write_report_files(out_dir, scheme, r);
  write_timing(out_dir, scheme, r.wall_time_s);
  out << "scheme=" << scheme << " status=" << r.status
      << " iterations=" << (r.ticks.empty() ? r.iterations.size() : r.ticks.size())
      << " energy_J=" << fmt(r.energy.consumed_J) << " objective_J=" << fmt(r.objective_exact_scaled)
      << " common_objective_J=" << fmt(r.common_objective) << " audit=" << (r.audit.ok ? "ok" : "violations")
      << '\n';
  return o.exit_code;
}

int compare_command(const std::string& config_path, const std::vector<std::string>& schemes,
                    const std::string& out_dir, std::ostream& out) {
  Loaded l;
  std::vector<SchemeOutcome> outcomes;
  try {
    if (schemes.empty()) throw UsageError("compare needs at least one scheme");
    for (const auto& s : schemes) check_scheme(s);
    l = load(config_path);
    outcomes = run_schemes(l.config, l.track, schemes);
  } catch (...) {
    std::string msg;
    const int code = exit_code_for_current_exception(msg);
    std::cerr << "error: " << msg << '\n';
    return code;
  }
  for (const auto& o : outcomes) {
    if (!o.report) continue;
    write_report_files(out_dir, o.scheme, *o.report);
    write_timing(out_dir, o.scheme, o.report->wall_time_s);
  }
  const auto rows = comparison_rows(outcomes);
  atomic_write((std::filesystem::path(out_dir) / "comparison.csv").string(), comparison_csv(rows));
  for (const auto& r : rows) {
    out << r.scheme << ": status=" << r.status << " common_objective_J=" << fmt(r.common_objective_J)
        << " energy_J=" << fmt(r.energy_J) << " disguise=" << fmt(r.disguise_total);
    if (!r.error.empty()) out << " error=\"" << r.error << '"';
    out << '\n';
  }
  return kExitOk;
}

int sweep_command(const std::string& config_path, std::size_t points, const std::string& out_dir,
                  std::ostream& out) {
  std::vector<ParetoPoint> series;
  try {
    const auto grid = pareto_grid(points);
    const Loaded l = load(config_path);
    series = pareto_sweep(l.config, l.track, grid);
  } catch (...) {
    std::string msg;
    const int code = exit_code_for_current_exception(msg);
    std::cerr << "error: " << msg << '\n';
    return code;
  }
  atomic_write((std::filesystem::path(out_dir) / "pareto.csv").string(), pareto_csv(series));
  for (const auto& p : series) {
    out << "mu1=" << fmt(p.mu1, 4) << " mu2=" << fmt(p.mu2, 4) << " power_W=" << fmt(p.power_W)
        << " disguise=" << fmt(p.disguise) << " status=" << p.status << " start=" << p.start << '\n';
  }
  out << "saturation_ratio=" << fmt(pareto_saturation_ratio(series)) << '\n';
  return kExitOk;
}

int oracle_command(const std::string& config_path, double grid_step, const std::string& out_dir,
                   std::ostream& out) {
  try {
    const Loaded l = load(config_path);
    const ScenarioConfig& cfg = l.config.scenario;
    const BruteForceResult bf = brute_force_small(l.track, cfg, grid_step);
    SolverOptions opts = l.config.solver;
    opts.scheme = Scheme::Proposed;
    const RunReport rep = solve_offline(l.track, cfg, opts);
    const double band = grid_cell_band(cfg, grid_step);
    const double gap = rep.objective_exact - bf.objective;
    const bool within = std::abs(gap) <= band;

    ojson j;
    j["n_slots"] = cfg.n_slots;
    j["grid_step"] = grid_step;
    j["lattice_leaves"] = bf.leaves;
    j["estimated_evaluations"] = bf.estimate.evaluations;
    j["incumbent_objective"] = bf.objective;
    ojson wp = ojson::array();
    for (const auto& w : bf.plan.waypoints) wp.push_back(ojson::array({w.x, w.y, w.z}));
    j["incumbent_plan"] = wp;
    j["solver_objective"] = rep.objective_exact;
    j["solver_status"] = rep.status;
    j["band"] = band;
    j["gap"] = gap;
    j["within_band"] = within;
    atomic_write((std::filesystem::path(out_dir) / "oracle.json").string(), j.dump(2) + "\n");
    out << "incumbent=" << fmt(bf.objective, 12) << " solver=" << fmt(rep.objective_exact, 12)
        << " band=" << fmt(band, 6) << " within_band=" << (within ? "yes" : "no") << '\n';
    return within ? kExitOk : kExitNonConvergence;
  } catch (...) {
    std::string msg;
    const int code = exit_code_for_current_exception(msg);
    std::cerr << "error: " << msg << '\n';
    return code;
  }
}

int fit_solar_command(const std::string& config_path, std::optional<std::array<double, 2>> band,
                      std::optional<int> samples, std::ostream& out) {
  try {
    RunConfig config = load_run_config(config_path);
    ScenarioConfig& cfg = config.scenario;
    if (band) cfg.solar_fit.z_band = band;
    if (samples) cfg.solar_fit.n_samples = *samples;
    if (band || samples) cfg.solar_fit.coefficients.reset();
    const SolarLinearApprox s = solar_for(cfg);
    ojson j;
    j["c1"] = s.c1;
    j["c2"] = s.c2;
    j["z_band"] = ojson::array({s.z_band[0], s.z_band[1]});
    j["max_excess"] = s.max_excess;
    j["max_relative_gap"] = s.max_relative_gap;
    j["source"] = s.source;
    out << j.dump(2) << '\n';
    return kExitOk;
  } catch (...) {
    std::string msg;
    const int code = exit_code_for_current_exception(msg);
    std::cerr << "error: " << msg << '\n';
    return code;
  }
}

}  // namespace covert
