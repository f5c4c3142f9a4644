#include "liquid/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<long>(d);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

template <class E>
E to_enum(const std::string& key, const std::string& v, std::initializer_list<std::pair<const char*, E>> opts) {
  for (auto& [name, e] : opts)
    if (v == name) return e;
  std::string all;
  for (auto& [name, e] : opts) all += std::string(all.empty() ? "" : "|") + name;
  throw ConfigError(key + ": expected one of " + all + ", got '" + v + "'");
}

using Setter = std::function<void(SystemConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"scheme", [](auto& c, auto& k, auto& v) {
         c.scheme = to_enum<Scheme>(k, v, {{"basic", Scheme::basic}, {"partial", Scheme::partial}, {"complete", Scheme::complete}});
       }},
      {"engine", [](auto& c, auto& k, auto& v) {
         c.engine = to_enum<EngineKind>(
             k, v, {{"explicit", EngineKind::explicit_sets}, {"aggregate", EngineKind::aggregate}, {"both", EngineKind::both}});
       }},
      {"N", [](auto& c, auto& k, auto& v) { c.N = static_cast<int>(to_long(k, v)); }},
      {"n_obj", [](auto& c, auto& k, auto& v) { c.n_obj = static_cast<int>(to_long(k, v)); }},
      {"k_c", [](auto& c, auto& k, auto& v) { c.k_c = static_cast<int>(to_long(k, v)); }},
      {"lambda", [](auto& c, auto& k, auto& v) { c.lambda = to_double(k, v); }},
      {"T_tot", [](auto& c, auto& k, auto& v) { c.T_tot = to_double(k, v); }},
      {"derive", [](auto& c, auto& k, auto& v) { c.derive = to_bool(k, v); }},
      {"beta", [](auto& c, auto& k, auto& v) { c.beta = to_double(k, v); }},
      {"delta", [](auto& c, auto& k, auto& v) { c.delta = to_double(k, v); }},
      {"beta_vN", [](auto& c, auto& k, auto& v) { c.beta_vN = static_cast<int>(to_long(k, v)); }},
      {"kappa", [](auto& c, auto& k, auto& v) { c.kappa = to_double(k, v); }},
      {"ancillary_mode", [](auto& c, auto& k, auto& v) {
         c.ancillary_mode = to_enum<AncillaryMode>(k, v, {{"ancillary", AncillaryMode::ancillary}, {"strict", AncillaryMode::strict}});
       }},
      {"gamma", [](auto& c, auto& k, auto& v) { c.gamma = to_double(k, v); }},
      {"complete_policy", [](auto& c, auto& k, auto& v) {
         c.complete_policy = to_enum<CompletePolicy>(
             k, v, {{"ancillary_first", CompletePolicy::ancillary_first}, {"synchronized", CompletePolicy::synchronized}});
       }},
      {"rate_policy", [](auto& c, auto& k, auto& v) {
         c.rate_policy = to_enum<RatePolicy>(k, v, {{"fixed", RatePolicy::fixed}, {"two_level", RatePolicy::two_level}});
       }},
      {"rate_threshold", [](auto& c, auto& k, auto& v) { c.rate_threshold = static_cast<int>(to_long(k, v)); }},
      {"rate_speedup", [](auto& c, auto& k, auto& v) { c.rate_speedup = to_double(k, v); }},
      {"halt_on_loss", [](auto& c, auto& k, auto& v) { c.halt_on_loss = to_bool(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_long(k, v)); }},
      {"horizon", [](auto& c, auto& k, auto& v) { c.horizon = to_double(k, v); }},
      {"horizon_events", [](auto& c, auto& k, auto& v) { c.horizon_events = to_long(k, v); }},
      {"burn_in", [](auto& c, auto& k, auto& v) { c.burn_in = to_double(k, v); }},
      {"check_lemmas", [](auto& c, auto& k, auto& v) { c.check_lemmas = to_bool(k, v); }},
      {"trace_limit", [](auto& c, auto& k, auto& v) { c.trace_limit = to_long(k, v); }},
  };
  return m;
}

}  // namespace

void apply_setting(SystemConfig& cfg, const std::string& key, const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown setting '" + key + "'");
  it->second(cfg, key, trim(value));
  cfg.resolved = false;
}

std::vector<std::string> setting_names() {
  std::vector<std::string> out;
  for (auto& [k, _] : setters()) out.push_back(k);
  return out;
}

SystemConfig parse_config(std::istream& in, SystemConfig cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

SystemConfig load_config(const std::string& path, SystemConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  return parse_config(in, std::move(base));
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::basic: return "basic";
    case Scheme::partial: return "partial";
    case Scheme::complete: return "complete";
  }
  return "?";
}
const char* to_string(EngineKind e) {
  switch (e) {
    case EngineKind::explicit_sets: return "explicit";
    case EngineKind::aggregate: return "aggregate";
    case EngineKind::both: return "both";
  }
  return "?";
}
const char* to_string(AncillaryMode m) { return m == AncillaryMode::ancillary ? "ancillary" : "strict"; }
const char* to_string(CompletePolicy p) {
  return p == CompletePolicy::ancillary_first ? "ancillary_first" : "synchronized";
}
const char* to_string(RatePolicy p) { return p == RatePolicy::fixed ? "fixed" : "two_level"; }

void write_config(std::ostream& out, const SystemConfig& c) {
  out << std::setprecision(17);
  out << "scheme = " << to_string(c.scheme) << '\n'
      << "engine = " << to_string(c.engine) << '\n'
      << "N = " << c.N << '\n'
      << "n_obj = " << c.n_obj << '\n'
      << "k_c = " << c.k_c << '\n'
      << "lambda = " << c.lambda << '\n'
      << "T_tot = " << c.T_tot << '\n'
      << "derive = " << (c.derive ? "true" : "false") << '\n'
      << "beta = " << c.beta << '\n'
      << "delta = " << c.delta << '\n'
      << "beta_vN = " << c.beta_vN << '\n'
      << "kappa = " << c.kappa << '\n'
      << "ancillary_mode = " << to_string(c.ancillary_mode) << '\n'
      << "gamma = " << c.gamma << '\n'
      << "complete_policy = " << to_string(c.complete_policy) << '\n'
      << "rate_policy = " << to_string(c.rate_policy) << '\n'
      << "rate_threshold = " << c.rate_threshold << '\n'
      << "rate_speedup = " << c.rate_speedup << '\n'
      << "halt_on_loss = " << (c.halt_on_loss ? "true" : "false") << '\n'
      << "seed = " << c.seed << '\n'
      << "horizon = " << c.horizon << '\n'
      << "horizon_events = " << c.horizon_events << '\n'
      << "burn_in = " << c.burn_in << '\n'
      << "check_lemmas = " << (c.check_lemmas ? "true" : "false") << '\n'
      << "trace_limit = " << c.trace_limit << '\n';
}

PartialSchedule derive_schedule(const SystemConfig& cfg) {
  PartialSchedule s;
  const double lT = cfg.lambda * cfg.T_tot;
  s.kappa = cfg.kappa > 0.0 ? cfg.kappa : schedule_kappa(cfg.delta, lT);
  const double exact = s.kappa * cfg.n_obj / cfg.N;
  s.block = static_cast<int>(std::floor(exact + 1e-9));
  if (s.block < 1) throw ConfigError("kappa n_obj / N is below one object per transitional node");
  s.adjusted = std::fabs(exact - s.block) > 1e-9;
  s.kappa_eff = static_cast<double>(s.block) * cfg.N / cfg.n_obj;
  s.dt = s.block * cfg.T_tot / cfg.n_obj;
  return s;
}

void resolve(SystemConfig& c) {
  if (c.resolved) return;
  c.adjustments.clear();
  if (c.N < 1) throw ConfigError("N must be positive");
  if (c.n_obj < 1) throw ConfigError("n_obj must be positive");
  if (!(c.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (c.horizon < 0.0) throw ConfigError("horizon must be nonnegative");
  if (c.rate_policy == RatePolicy::two_level && !(c.rate_speedup >= 1.0))
    throw ConfigError("rate_speedup must be at least 1");

  if (c.scheme == Scheme::partial && c.derive) {
    c.params = derive_parameters(c.N, c.beta, c.delta);
    c.T_tot = c.params.lambda_T_tot / c.lambda;
    c.k_c = c.N - static_cast<int>(std::lround(c.beta * c.N));
    c.beta_vN = c.params.K_v_int;
    if (c.kappa <= 0.0) c.kappa = c.params.kappa;
    for (auto& a : c.params.adjustments) c.adjustments.push_back(a);
    if (!c.params.preconditions_hold()) c.adjustments.push_back("concentration preconditions not met (warning)");
  }
  if (c.scheme == Scheme::complete) {
    if (c.delta > 0.0) c.k_c = c.N - static_cast<int>(std::lround(c.delta * c.N));
    c.delta = static_cast<double>(c.N - c.k_c) / c.N;
    if (!(c.gamma > 0.0)) throw ConfigError("gamma must be positive");
    c.T_tot = c.gamma / (c.lambda * c.N);  // node-job time D
  }
  if (c.k_c < 1 || c.k_c >= c.N) throw ConfigError("need 1 <= k_c < N");
  if (!(c.T_tot > 0.0)) throw ConfigError("T_tot must be positive");

  if (c.scheme == Scheme::partial) {
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("partial scheme needs delta in (0, 1)");
    const double dN = c.delta * c.N;
    if (std::fabs(dN - std::lround(dN)) > 1e-6) throw ConfigError("delta N must be an integer");
    if (c.beta_vN < 0) throw ConfigError("beta_vN must be nonnegative");
    const auto s = derive_schedule(c);
    if (s.adjusted)
      c.adjustments.push_back("block size rounded down to " + std::to_string(s.block) + " (kappa " +
                              std::to_string(s.kappa) + " -> " + std::to_string(s.kappa_eff) + ")");
    if (static_cast<long>(c.beta_vN) * s.block > c.n_obj)
      throw ConfigError("beta_vN blocks exceed the object count");
  }
  if (c.scheme == Scheme::complete) {
    if (c.beta_vN < 1) throw ConfigError("complete scheme needs beta_vN >= 1");
    if (c.n_obj % c.N != 0) throw ConfigError("n_obj must be a multiple of N");
    if (c.n_obj % (static_cast<long>(c.beta_vN) * c.N) != 0)
      throw ConfigError("n_obj / (beta_vN N) must be a positive integer");
  }
  c.resolved = true;
}

}  // namespace liquid
