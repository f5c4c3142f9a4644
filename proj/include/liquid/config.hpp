#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "liquid/bounds.hpp"

namespace liquid {

enum class Scheme { basic, partial, complete };
enum class EngineKind { explicit_sets, aggregate, both };
enum class AncillaryMode { ancillary, strict };       // partial scheme, when g_vN = 0
enum class CompletePolicy { ancillary_first, synchronized };
enum class RatePolicy { fixed, two_level };

struct SystemConfig {
  Scheme scheme = Scheme::basic;
  EngineKind engine = EngineKind::aggregate;
  int N = 12;
  int n_obj = 64;
  int k_c = 8;
  double lambda = 1.0;
  double T_tot = 0.25;

  // Partial scheme. With derive set, T_tot, k_c, beta_vN and kappa come
  // from (N, beta, delta).
  bool derive = false;
  double beta = 0.0;
  double delta = 0.0;
  int beta_vN = 0;
  double kappa = 0.0;  // 0 means ((1 - delta) lambda T_tot)^{-1}
  AncillaryMode ancillary_mode = AncillaryMode::ancillary;

  // Complete scheme: node-job time D = gamma / (lambda N).
  double gamma = 0.313;
  CompletePolicy complete_policy = CompletePolicy::ancillary_first;

  RatePolicy rate_policy = RatePolicy::fixed;
  int rate_threshold = 0;     // backlog (or f1N for basic) at which the fast rate applies
  double rate_speedup = 2.0;  // fast interval = slow interval / speedup

  bool halt_on_loss = false;
  std::uint64_t seed = 1;
  double horizon = 10.0;     // time horizon
  long horizon_events = 0;   // optional cap on trace rows; 0 disables
  double burn_in = 0.0;      // metrics ignore rows before this time
  bool check_lemmas = false;  // partial: run the invariant suite every event
  long trace_limit = 1000000;  // cap on stored trace/trajectory rows

  // Filled by resolve().
  bool resolved = false;
  ParamSet params;              // partial scheme with derive
  std::vector<std::string> adjustments;
};

// Set one field by its flag name; throws ConfigError on unknown key or bad value.
void apply_setting(SystemConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> setting_names();

// Flat "key = value" text, '#' comments.
SystemConfig parse_config(std::istream& in, SystemConfig base = {});
SystemConfig load_config(const std::string& path, SystemConfig base = {});
void write_config(std::ostream& out, const SystemConfig& cfg);

// Derives dependent fields and checks cross-field consistency.
void resolve(SystemConfig& cfg);

const char* to_string(Scheme s);
const char* to_string(EngineKind e);
const char* to_string(AncillaryMode m);
const char* to_string(CompletePolicy p);
const char* to_string(RatePolicy p);

// Partial-scheme block geometry after integrality rounding.
struct PartialSchedule {
  double kappa = 0;      // configured kappa
  int block = 0;         // objects per transitional node
  double kappa_eff = 0;  // block * N / n_obj
  double dt = 0;         // Delta_t = block * T_tot / n_obj
  bool adjusted = false;
};
PartialSchedule derive_schedule(const SystemConfig& cfg);

}  // namespace liquid
