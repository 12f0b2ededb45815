#include "covert_pursuit/config_io.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "covert_pursuit/errors.hpp"

namespace covert {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

/// Reads typed keys from one JSON object and rejects the keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw UsageError("config: '" + path_ + "' must be an object");
  }

  void num(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void opt_num(const char* key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        if (!v->is_number()) fail(key, "a number or null");
        out = v->get<double>();
      }
    }
  }
  void count(const char* key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a nonnegative integer");
      out = v->get<std::size_t>();
    }
  }
  void integer(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void flag(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void text(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void opt_text(const char* key, std::optional<std::string>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        if (!v->is_string()) fail(key, "a string or null");
        out = v->get<std::string>();
      }
    }
  }
  void opt_pair(const char* key, std::optional<std::array<double, 2>>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        fail(key, "a two-number array or null");
      }
      out = std::array<double, 2>{(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }
  std::optional<Section> sub(const char* key) {
    if (const json* v = find(key)) return Section(*v, path_ + "." + key);
    return std::nullopt;
  }
  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw UsageError("config: unknown key '" + path_ + "." + item.key() + "'");
    }
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw UsageError("config: '" + path_ + "." + key + "' must be " + expected);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_scenario(Section& s, ScenarioConfig& c) {
  s.num("horizon_T", c.horizon_T);
  s.num("delta", c.delta);
  s.count("n_slots", c.n_slots);
  s.num("v_hm", c.v_hm);
  s.num("v_vm", c.v_vm);
  s.num("target_alt_H", c.target_alt_H);
  s.num("monitor_z0", c.monitor_z0);
  s.num("z_lower", c.z_lower);
  s.num("d_max", c.d_max);
  s.num("mu1", c.mu1);
  s.num("mu2", c.mu2);
  s.num("e0", c.e0);
  s.num("eta0", c.eta0);
  s.num("c3", c.c3);
  s.num("target_v_max", c.target_v_max);
  if (auto p = s.sub("propulsion")) {
    p->num("p0", c.propulsion.p0);
    p->num("p1", c.propulsion.p1);
    p->num("u_tip", c.propulsion.u_tip);
    p->num("v0", c.propulsion.v0);
    p->num("d_f", c.propulsion.d_f);
    p->num("rho", c.propulsion.rho);
    p->num("s", c.propulsion.s);
    p->num("a_disc", c.propulsion.a_disc);
    p->finish();
  }
  if (auto t = s.sub("thrust")) {
    t->num("mass", c.thrust.mass);
    t->num("g", c.thrust.g);
    t->finish();
  }
  if (auto p = s.sub("solar")) {
    p->num("eta", c.solar.eta);
    p->num("s_panel", c.solar.s_panel);
    p->num("p_i", c.solar.p_i);
    p->num("alpha", c.solar.alpha);
    p->num("cos_zenith", c.solar.cos_zenith);
    p->finish();
  }
  if (auto f = s.sub("solar_fit")) {
    f->opt_pair("z_band", c.solar_fit.z_band);
    f->integer("n_samples", c.solar_fit.n_samples);
    f->opt_pair("coefficients", c.solar_fit.coefficients);
    f->finish();
  }
}

void read_solver(Section& s, SolverOptions& o) {
  s.opt_num("M", o.M);
  s.flag("adaptive_M", o.adaptive_M);
  s.num("m_floor", o.m_floor);
  s.num("eps_converge", o.eps_converge);
  s.integer("max_iters", o.max_iters);
  s.integer("restart_period", o.restart_period);
  s.num("q_min", o.q_min);
  s.num("smoothing_eps", o.smoothing_eps);
  s.num("q_margin", o.q_margin);
  if (auto in = s.sub("inner")) {
    in->num("gap_tol", o.inner.gap_tol);
    in->num("kkt_tol", o.inner.kkt_tol);
    in->num("newton_tol", o.inner.newton_tol);
    in->num("barrier_growth", o.inner.barrier_growth);
    in->integer("max_newton", o.inner.max_newton);
    in->num("strict_margin", o.inner.strict_margin);
    in->num("phase1_gamma", o.inner.phase1_gamma);
    in->finish();
  }
}

template <typename J>
J pair_or_null(const std::optional<std::array<double, 2>>& p) {
  if (!p) return nullptr;
  return J::array({(*p)[0], (*p)[1]});
}

ojson solver_json(const SolverOptions& o) {
  ojson j;
  j["M"] = o.M ? ojson(*o.M) : ojson(nullptr);
  j["adaptive_M"] = o.adaptive_M;
  j["m_floor"] = o.m_floor;
  j["eps_converge"] = o.eps_converge;
  j["max_iters"] = o.max_iters;
  j["restart_period"] = o.restart_period;
  j["q_min"] = o.q_min;
  j["smoothing_eps"] = o.smoothing_eps;
  j["q_margin"] = o.q_margin;
  ojson in;
  in["gap_tol"] = o.inner.gap_tol;
  in["kkt_tol"] = o.inner.kkt_tol;
  in["newton_tol"] = o.inner.newton_tol;
  in["barrier_growth"] = o.inner.barrier_growth;
  in["max_newton"] = o.inner.max_newton;
  in["strict_margin"] = o.inner.strict_margin;
  in["phase1_gamma"] = o.inner.phase1_gamma;
  j["inner"] = in;
  return j;
}

ojson scenario_json(const ScenarioConfig& c) {
  ojson j;
  j["horizon_T"] = c.horizon_T;
  j["delta"] = c.delta;
  j["n_slots"] = c.n_slots;
  j["v_hm"] = c.v_hm;
  j["v_vm"] = c.v_vm;
  j["target_alt_H"] = c.target_alt_H;
  j["monitor_z0"] = c.monitor_z0;
  j["z_lower"] = c.z_lower;
  j["d_max"] = c.d_max;
  j["mu1"] = c.mu1;
  j["mu2"] = c.mu2;
  j["e0"] = c.e0;
  j["eta0"] = c.eta0;
  j["c3"] = c.c3;
  j["target_v_max"] = c.target_v_max;
  j["propulsion"] = ojson{{"p0", c.propulsion.p0},       {"p1", c.propulsion.p1},   {"u_tip", c.propulsion.u_tip},
                          {"v0", c.propulsion.v0},       {"d_f", c.propulsion.d_f}, {"rho", c.propulsion.rho},
                          {"s", c.propulsion.s},         {"a_disc", c.propulsion.a_disc}};
  j["thrust"] = ojson{{"mass", c.thrust.mass}, {"g", c.thrust.g}};
  j["solar"] = ojson{{"eta", c.solar.eta},
                     {"s_panel", c.solar.s_panel},
                     {"p_i", c.solar.p_i},
                     {"alpha", c.solar.alpha},
                     {"cos_zenith", c.solar.cos_zenith}};
  ojson fit;
  fit["z_band"] = pair_or_null<ojson>(c.solar_fit.z_band);
  fit["n_samples"] = c.solar_fit.n_samples;
  fit["coefficients"] = pair_or_null<ojson>(c.solar_fit.coefficients);
  j["solar_fit"] = fit;
  return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  Section top(root, "config");
  if (auto s = top.sub("scenario")) {
    read_scenario(*s, cfg.scenario);
    s->finish();
  }
  if (auto s = top.sub("solver")) {
    read_solver(*s, cfg.solver);
    s->finish();
  }
  cfg.online.solver = cfg.solver;
  if (auto s = top.sub("online")) {
    s->count("horizon", cfg.online.horizon);
    std::string predictor = to_string(cfg.online.predictor);
    s->text("predictor", predictor);
    cfg.online.predictor = parse_predictor(predictor);
    s->count("history_window", cfg.online.history_window);
    s->flag("heading_rows", cfg.online.heading_rows);
    s->num("margin_gain", cfg.online.margin_gain);
    s->num("margin_cap_fraction", cfg.online.margin_cap_fraction);
    s->num("soft_ffr_weight", cfg.online.soft_ffr_weight);
    if (auto sv = s->sub("solver")) {
      read_solver(*sv, cfg.online.solver);
      sv->finish();
    }
    s->finish();
  }
  if (auto s = top.sub("target")) {
    s->opt_text("path", cfg.target_path);
    s->finish();
  }
  top.finish();
  try {
    cfg.scenario.validate();
    cfg.solver.validate();
    cfg.online.validate();
  } catch (const DomainError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& config) {
  ojson root;
  root["scenario"] = scenario_json(config.scenario);
  root["solver"] = solver_json(config.solver);
  ojson online;
  online["horizon"] = config.online.horizon;
  online["predictor"] = to_string(config.online.predictor);
  online["history_window"] = config.online.history_window;
  online["heading_rows"] = config.online.heading_rows;
  online["margin_gain"] = config.online.margin_gain;
  online["margin_cap_fraction"] = config.online.margin_cap_fraction;
  online["soft_ffr_weight"] = config.online.soft_ffr_weight;
  online["solver"] = solver_json(config.online.solver);
  root["online"] = online;
  root["target"] = ojson{{"path", config.target_path ? ojson(*config.target_path) : ojson(nullptr)}};
  return root.dump(2) + "\n";
}

TargetTrack resolve_track(const RunConfig& config, const std::string& base_dir) {
  if (!config.target_path) return generate_target_track(config.scenario);
  std::filesystem::path p(*config.target_path);
  if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
  return load_target_track(p.string(), config.scenario.n_slots + 1);
}

}  // namespace covert
