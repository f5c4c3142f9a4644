#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "liquid/config.hpp"
#include "liquid/failure.hpp"
#include "liquid/trace.hpp"

namespace liquid {

struct LossEvent {
  double t = 0.0;
  int position = -1;
  int erased = 0;
  friend bool operator==(const LossEvent&, const LossEvent&) = default;
};

struct TrajectoryPoint {
  double t = 0.0;
  int g_vN = 0, h_vN = 0, x_v = 0;
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::vector<LossEvent> losses;  // transitions into a lossy state
  long repairs = 0;               // standard plus ancillary
  long ancillary = 0;
  long reads_total = 0;
  long regenerated_total = 0;
  long ancillary_regenerated = 0;
  long dropped_ancillary = 0;  // complete scheme duplicates
  long settled_dropped = 0;    // partial launches
  long overwrites = 0;
  long failures = 0, noops = 0, launches = 0;
  // Standard repairs at t >= burn_in.
  long measured = 0;
  double measured_sum = 0.0, measured_sumsq = 0.0;
  std::vector<long> regen_hist;
  std::vector<TrajectoryPoint> trajectory;
  int trajectory_stride = 1;
  long stop_index = -1;  // partial: first launch with a stopping event
  double stop_time = std::numeric_limits<double>::infinity();
  std::vector<int> busy_maxima;  // complete: peak backlog per busy period
  long invariant_violations = 0;
  std::vector<std::string> violation_notes;  // first few only
  long events = 0;
  double end_time = 0.0;
  bool halted = false;

  double time_to_loss() const {
    return losses.empty() ? std::numeric_limits<double>::infinity() : losses.front().t;
  }
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct Trial {
  TrialResult result;
  std::vector<TraceRow> trace;
  std::vector<LaunchRecord> launches;
  bool trace_truncated = false;
};

// Failures arrive at total rate lambda N from a stream keyed by the seed.
// With engine = both, the two engines run on the same failures and any
// difference raises EquivalenceError carrying the first differing row.
Trial run_trial(const SystemConfig& cfg, std::uint64_t seed);
Trial run_trial(const SystemConfig& cfg, std::uint64_t seed, const FailureScript& script);

// Failure and no-op rows of a trace, as a script that reproduces it.
FailureScript script_from_trace(const std::vector<TraceRow>& trace, int N);

struct EnsembleSummary {
  SystemConfig cfg;
  int trials = 0;
  std::vector<TrialResult> results;  // seed order, trajectories dropped
  long measured = 0;
  double regen_mean = 0.0;
  double regen_se = 0.0;      // from the spread of per-trial means
  double regen_se_iid = 0.0;  // as if every repair were independent
  std::vector<long> regen_hist;
  int loss_trials = 0;
  long total_losses = 0;
  double loss_time_mean = 0.0, loss_time_se = 0.0;  // halting trials that lost data
  double total_time = 0.0;
  long busy_periods = 0;
  std::vector<long> busy_hist;  // by peak backlog
  long violations = 0;
  long repairs = 0, reads_total = 0;
};

// Trials use seeds cfg.seed, cfg.seed + 1, ...; the reduction runs in seed
// order so the thread count never changes the summary.
EnsembleSummary run_ensemble(const SystemConfig& cfg, int seed_count, int parallelism);

struct BoundRow {
  std::string name;
  double analytic = 0.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double margin_se = 0.0;  // signed distance to failure in standard errors
  bool pass = false;
  std::string note;
};
using BoundReport = std::vector<BoundRow>;

BoundReport validate_bounds(const EnsembleSummary& summary);

// Peak number of waiting customers in each of `count` M/D/1 busy periods
// with load gamma (unit arrival rate).
std::vector<int> md1_busy_period_maxima(double gamma, long count, std::uint64_t seed);

struct CodecCheck {
  long events = 0;
  long repairs = 0;
  long decodes = 0;
  long unrecoverable = 0;  // decodes that correctly refused
  long mismatches = 0;
  bool pass = false;
};
// Basic scheme with real payloads pushed through the codec at every repair.
CodecCheck end_to_end_codec_check(const SystemConfig& cfg, const FailureScript& script);
CodecCheck end_to_end_codec_check(const SystemConfig& cfg);

}  // namespace liquid
