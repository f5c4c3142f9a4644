// Command-line front end: one verb per experiment type. Every SystemConfig
// field is also a flag of the same name; flags override the config file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "liquid/bounds.hpp"
#include "liquid/config.hpp"
#include "liquid/errors.hpp"
#include "liquid/harness.hpp"
#include "liquid/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace liquid;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kOutDirEnv = "LIQUID_OUT_DIR";

struct Common {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::string out_dir;
};

void add_config_flags(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "flat key = value config file");
  app->add_option("-o,--out", c.out_dir, std::string("output directory (default $") + kOutDirEnv + " or .)");
  for (const auto& name : setting_names()) {
    app->add_option_function<std::string>(
        "--" + name, [&c, name](const std::string& v) { c.overrides[name] = v; }, "SystemConfig." + name);
  }
}

SystemConfig build_config(const Common& c) {
  SystemConfig cfg;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  for (const auto& [k, v] : c.overrides) apply_setting(cfg, k, v);
  resolve(cfg);
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::path p = c.out_dir;
  if (p.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    p = env && *env ? env : ".";
  }
  fs::create_directories(p);
  return p;
}

json config_json(const SystemConfig& cfg) {
  std::ostringstream ss;
  write_config(ss, cfg);
  json j = json::object();
  std::istringstream in(ss.str());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

json params_json(const ParamSet& p) {
  return {{"N", p.N},
          {"beta", p.beta},
          {"delta", p.delta},
          {"gbar", p.gbar},
          {"beta_bar", p.beta_bar},
          {"xi", p.xi},
          {"gamma_m", p.gamma_m},
          {"gamma_a", p.gamma_a},
          {"gamma_v", p.gamma_v},
          {"Z_m", p.Z_m},
          {"Z_a", p.Z_a},
          {"Z_v", p.Z_v},
          {"K_m", p.K_m},
          {"K_a", p.K_a},
          {"K_v", p.K_v},
          {"K_m_int", p.K_m_int},
          {"K_a_int", p.K_a_int},
          {"K_v_int", p.K_v_int},
          {"kappa", p.kappa},
          {"lambda_dt", p.lambda_dt},
          {"lambda_T_tot", p.lambda_T_tot},
          {"beta_v", p.beta_v},
          {"preconditions_hold", p.preconditions_hold()},
          {"gamma_order", p.gamma_order},
          {"z_order", p.z_order},
          {"adjustments", p.adjustments}};
}

json result_json(const TrialResult& r) {
  json losses = json::array();
  for (const auto& l : r.losses) losses.push_back({{"t", l.t}, {"position", l.position}, {"erased", l.erased}});
  json j = {{"seed", r.seed},
            {"events", r.events},
            {"end_time", r.end_time},
            {"halted", r.halted},
            {"repairs", r.repairs},
            {"ancillary", r.ancillary},
            {"reads_total", r.reads_total},
            {"regenerated_total", r.regenerated_total},
            {"ancillary_regenerated", r.ancillary_regenerated},
            {"dropped_ancillary", r.dropped_ancillary},
            {"settled_dropped", r.settled_dropped},
            {"overwrites", r.overwrites},
            {"failures", r.failures},
            {"noops", r.noops},
            {"launches", r.launches},
            {"measured_repairs", r.measured},
            {"measured_regenerated_mean", r.measured ? r.measured_sum / r.measured : 0.0},
            {"losses", losses},
            {"stop_index", r.stop_index},
            {"busy_periods", r.busy_maxima.size()},
            {"invariant_violations", r.invariant_violations},
            {"violation_notes", r.violation_notes}};
  if (r.stop_index >= 0) j["stop_time"] = r.stop_time;
  return j;
}

json report_json(const BoundReport& rep) {
  json a = json::array();
  for (const auto& r : rep)
    a.push_back({{"name", r.name},
                 {"analytic", r.analytic},
                 {"empirical", r.empirical},
                 {"stderr", r.stderr_},
                 {"margin_se", std::isfinite(r.margin_se) ? json(r.margin_se) : json(nullptr)},
                 {"pass", r.pass},
                 {"note", r.note}});
  return a;
}

json envelope(const std::string& verb, const SystemConfig& cfg) {
  return {{"schema", "liquidsim-summary"}, {"schema_version", kSchemaVersion}, {"verb", verb},
          {"config", config_json(cfg)},    {"adjustments", cfg.adjustments}};
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p);
  f << j.dump(2) << '\n';
  std::cout << "wrote " << p.string() << '\n';
}

void write_trajectory(const fs::path& p, const TrialResult& r) {
  std::ofstream f(p);
  f << "t,g_vN,h_vN,x_v\n";
  f.precision(17);
  for (const auto& x : r.trajectory) f << x.t << ',' << x.g_vN << ',' << x.h_vN << ',' << x.x_v << '\n';
}

void write_outputs(const fs::path& dir, const SystemConfig& cfg, const Trial& t, const std::string& verb) {
  {
    std::ofstream f(dir / "trace.csv");
    write_trace_csv(f, cfg.scheme, cfg.n_obj, t.trace);
  }
  if (cfg.scheme == Scheme::partial) {
    std::ofstream f(dir / "launches.csv");
    write_launch_csv(f, cfg.n_obj, t.launches);
  }
  write_trajectory(dir / "trajectory.csv", t.result);
  json j = envelope(verb, cfg);
  j["trial"] = result_json(t.result);
  j["trace_rows"] = t.trace.size();
  j["trace_truncated"] = t.trace_truncated;
  if (cfg.derive) j["params"] = params_json(cfg.params);
  write_json(dir / "summary.json", j);
}

json summary_json(const EnsembleSummary& s) {
  json trials = json::array();
  for (const auto& r : s.results) trials.push_back(result_json(r));
  return {{"trials", s.trials},
          {"measured_repairs", s.measured},
          {"regenerated_mean", s.regen_mean},
          {"regenerated_se", s.regen_se},
          {"regenerated_se_iid", s.regen_se_iid},
          {"regenerated_histogram", s.regen_hist},
          {"loss_trials", s.loss_trials},
          {"total_losses", s.total_losses},
          {"time_to_loss_mean", s.loss_time_mean},
          {"time_to_loss_se", s.loss_time_se},
          {"total_time", s.total_time},
          {"busy_periods", s.busy_periods},
          {"busy_peak_histogram", s.busy_hist},
          {"invariant_violations", s.violations},
          {"repairs", s.repairs},
          {"reads_total", s.reads_total},
          {"per_trial", trials}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liquid storage repair simulator"};
  app.require_subcommand(1);

  Common run_c, ens_c, bnd_c, val_c, cod_c, rep_c;
  int seeds = 10, threads = 1;
  int val_seeds = 10, val_threads = 1;
  bool strict = false;
  std::string replay_trace;

  auto* run = app.add_subcommand("run", "one trial; writes trace.csv, trajectory.csv and summary.json");
  add_config_flags(run, run_c);

  auto* ens = app.add_subcommand("ensemble", "seeded trials cfg.seed, cfg.seed+1, ...");
  add_config_flags(ens, ens_c);
  ens->add_option("--seeds", seeds, "number of trials")->check(CLI::PositiveNumber);
  ens->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* bnd = app.add_subcommand("bounds", "analytic quantities for the configuration");
  add_config_flags(bnd, bnd_c);

  auto* val = app.add_subcommand("validate", "ensemble plus comparison against analytic bounds");
  add_config_flags(val, val_c);
  val->add_option("--seeds", val_seeds, "number of trials")->check(CLI::PositiveNumber);
  val->add_option("--threads", val_threads, "worker threads")->check(CLI::PositiveNumber);
  val->add_flag("--strict", strict, "exit with status 1 if any row fails");

  auto* cod = app.add_subcommand("codec-check", "basic scheme with real payloads through the codec");
  add_config_flags(cod, cod_c);

  auto* rep = app.add_subcommand("replay", "rerun the failures of a trace and compare");
  add_config_flags(rep, rep_c);
  rep->add_option("--trace", replay_trace, "trace.csv written by run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const SystemConfig cfg = build_config(run_c);
      const Trial t = run_trial(cfg, cfg.seed);
      write_outputs(out_dir(run_c), cfg, t, "run");
    } else if (*ens) {
      const SystemConfig cfg = build_config(ens_c);
      const auto s = run_ensemble(cfg, seeds, threads);
      json j = envelope("ensemble", cfg);
      j["summary"] = summary_json(s);
      write_json(out_dir(ens_c) / "summary.json", j);
    } else if (*bnd) {
      const SystemConfig cfg = build_config(bnd_c);
      json j = envelope("bounds", cfg);
      const double lT = cfg.lambda * cfg.T_tot;
      if (cfg.scheme == Scheme::basic) {
        const auto m = mttdl_lower_bound_basic(cfg.N, cfg.k_c, cfg.lambda, cfg.T_tot);
        j["mttdl_lower_bound"] = m.value;
        j["mttdl_negative"] = m.negative;
        j["mttdl_infinite"] = m.infinite;
        j["mean_regenerated"] = expected_erased(cfg.N, lT, 1.0);
        json pmf = json::array();
        for (int l = 0; l <= cfg.N; ++l) pmf.push_back(q_pmf(cfg.N, lT, l));
        j["q_pmf"] = pmf;
      } else if (cfg.scheme == Scheme::partial) {
        const auto sched = derive_schedule(cfg);
        j["block"] = sched.block;
        j["kappa_effective"] = sched.kappa_eff;
        j["lambda_dt"] = cfg.lambda * sched.dt;
        const double delta = cfg.delta > 0 ? cfg.delta : double(cfg.N - cfg.k_c) / cfg.N;
        j["mean_regenerated"] =
            partial_mean_regenerated(cfg.N, delta, lT, cfg.beta_vN, cfg.lambda * sched.dt);
        if (cfg.derive) {
          j["params"] = params_json(cfg.params);
          const auto a = appendixA_bounds(cfg.params, cfg.params.K_m_int);
          j["survivor_bounds"] = {{"q", a.q},          {"upper_tail", a.b_g_upper}, {"lower_tail", a.b_g_lower},
                                  {"per_event", a.per_event}, {"aggregate", a.aggregate},
                                  {"settled_loss_log", a.settled_loss_log},
                                  {"k_lemma_holds", a.k_lemma_holds}};
          const auto r = read_rate_targets(cfg.beta);
          j["read_rate_targets"] = {{"lower_bound", r.lower_bound},
                                    {"partial_target", r.partial_target},
                                    {"complete_target", r.complete_target}};
        }
      } else {
        const double delta = double(cfg.N - cfg.k_c) / cfg.N;
        const auto m = mttdl_lower_bound_complete(cfg.N, delta, cfg.gamma, cfg.lambda, cfg.T_tot);
        j["nu"] = m.nu;
        j["node_job_time"] = cfg.T_tot;
        j["mttdl_half_delta"] = m.half_delta;
        j["mttdl_literal"] = m.literal;
        j["mean_in_repair"] = mip_mean(cfg.N, cfg.lambda, cfg.T_tot);
      }
      write_json(out_dir(bnd_c) / "bounds.json", j);
    } else if (*val) {
      const SystemConfig cfg = build_config(val_c);
      const auto s = run_ensemble(cfg, val_seeds, val_threads);
      const auto report = validate_bounds(s);
      json j = envelope("validate", cfg);
      j["summary"] = summary_json(s);
      j["report"] = report_json(report);
      write_json(out_dir(val_c) / "summary.json", j);
      bool ok = true;
      for (const auto& r : report) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " analytic=" << r.analytic
                  << " empirical=" << r.empirical << " se=" << r.stderr_ << '\n';
        ok = ok && r.pass;
      }
      if (strict && !ok) return 1;
    } else if (*cod) {
      const SystemConfig cfg = build_config(cod_c);
      const auto r = end_to_end_codec_check(cfg);
      json j = envelope("codec-check", cfg);
      j["codec_check"] = {{"events", r.events},       {"repairs", r.repairs},
                          {"decodes", r.decodes},     {"unrecoverable", r.unrecoverable},
                          {"mismatches", r.mismatches}, {"pass", r.pass}};
      write_json(out_dir(cod_c) / "summary.json", j);
    } else if (*rep) {
      const SystemConfig cfg = build_config(rep_c);
      std::ifstream in(replay_trace);
      if (!in) throw ConfigError("cannot open " + replay_trace);
      const auto original = read_trace_csv(in, cfg.scheme, cfg.n_obj);
      const auto script = script_from_trace(original, cfg.N);
      const Trial t = run_trial(cfg, cfg.seed, script);
      // Rows after the last recorded failure cannot be reproduced once the
      // script runs out, so compare the common prefix.
      std::size_t same = 0;
      std::ostringstream a, b;
      write_trace_csv(a, cfg.scheme, cfg.n_obj, original);
      write_trace_csv(b, cfg.scheme, cfg.n_obj, t.trace);
      const bool identical = a.str() == b.str();
      const std::size_t n = std::min(original.size(), t.trace.size());
      while (same < n && describe(original[same]) == describe(t.trace[same])) ++same;
      json j = envelope("replay", cfg);
      j["replay"] = {{"rows_original", original.size()}, {"rows_replayed", t.trace.size()},
                     {"matching_prefix", same},          {"identical", identical}};
      {
        std::ofstream f(out_dir(rep_c) / "replay_trace.csv");
        write_trace_csv(f, cfg.scheme, cfg.n_obj, t.trace);
      }
      write_json(out_dir(rep_c) / "replay.json", j);
      if (!identical) {
        std::cerr << "replay diverges at row " << same << '\n';
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
