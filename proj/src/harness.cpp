#include "liquid/harness.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <thread>
#include <type_traits>

#include "liquid/codec.hpp"
#include "liquid/engine_basic.hpp"
#include "liquid/engine_complete.hpp"
#include "liquid/engine_partial.hpp"
#include "liquid/errors.hpp"

namespace liquid {
namespace {

constexpr std::uint64_t kFailureStream = 1;
constexpr std::uint64_t kPayloadStream = 2;
constexpr std::size_t kMaxNotes = 20;
constexpr long kTrajectoryCap = 1000000;

class Recorder {
 public:
  Recorder(const SystemConfig& cfg, Trial& out) : cfg_(cfg), out_(out) {
    if (cfg.N > 64) {
      const double per_time = cfg.n_obj / cfg.T_tot + cfg.lambda * cfg.N;
      const double expected = std::max(1.0, per_time * cfg.horizon);
      stride_ = std::max<long>(1, static_cast<long>(std::ceil(expected / kTrajectoryCap)));
    }
    out_.result.trajectory_stride = static_cast<int>(stride_);
  }

  bool capped() const { return cfg_.horizon_events > 0 && out_.result.events >= cfg_.horizon_events; }

  void row(const TraceRow& r) {
    ++out_.result.events;
    if (static_cast<long>(out_.trace.size()) < cfg_.trace_limit) out_.trace.push_back(r);
    else out_.trace_truncated = true;
  }

  void trajectory(double t, int g, int h, int x) {
    if ((out_.result.events - 1) % stride_ != 0) return;
    if (static_cast<long>(out_.result.trajectory.size()) >= kTrajectoryCap) return;
    out_.result.trajectory.push_back({t, g, h, x});
  }

  void standard(double t, int regenerated, int reads) {
    TrialResult& r = out_.result;
    ++r.repairs;
    r.reads_total += reads;
    r.regenerated_total += regenerated;
    if (t >= cfg_.burn_in) {
      ++r.measured;
      r.measured_sum += regenerated;
      r.measured_sumsq += static_cast<double>(regenerated) * regenerated;
      if (static_cast<int>(r.regen_hist.size()) <= regenerated) r.regen_hist.resize(regenerated + 1, 0);
      ++r.regen_hist[regenerated];
    }
  }

  void ancillary(int regenerated, int reads) {
    TrialResult& r = out_.result;
    ++r.repairs;
    ++r.ancillary;
    r.reads_total += reads;
    r.regenerated_total += regenerated;
    r.ancillary_regenerated += regenerated;
  }

  void violation(double t, const std::string& what) {
    TrialResult& r = out_.result;
    ++r.invariant_violations;
    if (r.violation_notes.size() < kMaxNotes) r.violation_notes.push_back("t=" + std::to_string(t) + ": " + what);
  }

  // Emits a loss row on entry into a lossy state; returns true to halt.
  template <class E>
  bool track_loss(double t, const E& eng, TraceRow base) {
    const auto loss = eng.detect_data_loss();
    if (!loss) {
      in_loss_ = false;
      return false;
    }
    if (in_loss_) return false;
    in_loss_ = true;
    out_.result.losses.push_back({t, loss->position, loss->erased});
    base.kind = EventKind::loss;
    base.t = t;
    base.target = -1;
    base.node = -1;
    base.position = loss->position;
    base.reads = base.regenerated = 0;
    row(base);
    if (cfg_.halt_on_loss) {
      out_.result.halted = true;
      return true;
    }
    return false;
  }

  TrialResult& result() { return out_.result; }
  Trial& trial() { return out_; }

 private:
  const SystemConfig& cfg_;
  Trial& out_;
  long stride_ = 1;
  bool in_loss_ = false;
};

double fast_interval(const SystemConfig& cfg, double slow, int level) {
  if (cfg.rate_policy == RatePolicy::two_level && level >= cfg.rate_threshold) return slow / cfg.rate_speedup;
  return slow;
}

// ------------------------------------------------------------------ basic

template <class E>
void drive_basic(const SystemConfig& cfg, FailureSource& src, Recorder& rec) {
  E eng(cfg);
  const double slow = cfg.T_tot / cfg.n_obj;
  double t_rep = fast_interval(cfg, slow, eng.head_erased());
  double t = 0.0;
  while (!rec.capped()) {
    const FailureEvent* ev = src.peek();
    const bool fail = ev && ev->time <= t_rep;
    const double t_next = fail ? ev->time : t_rep;
    if (t_next > cfg.horizon) break;
    t = t_next;
    TraceRow row;
    row.t = t;
    if (fail) {
      const FailureEvent e = *ev;
      src.pop();
      const auto r = eng.apply_failure(e.target);
      ++rec.result().failures;
      row.kind = EventKind::failure;
      row.target = e.target;
      row.node = r.slot;
      row.regenerated = 0;
    } else {
      const auto r = eng.repair_head(true);
      rec.standard(t, r.regenerated, r.reads);
      row.kind = EventKind::repair;
      row.position = r.position;
      row.reads = r.reads;
      row.regenerated = r.regenerated;
      if (r.unrecoverable) row.flags |= kUnrecoverable;
      t_rep += fast_interval(cfg, slow, eng.head_erased());
    }
    row.f1N = eng.head_erased();
    rec.row(row);
    rec.trajectory(t, 0, 0, 0);
    if (rec.track_loss(t, eng, row)) break;
  }
  rec.result().end_time = rec.result().halted ? t : cfg.horizon;
}

// ---------------------------------------------------------------- partial

template <class E>
void check_partial(const E& eng, double t, EventKind kind, const LaunchRecord* launched, Recorder& rec) {
  const PartialCore& core = eng.core();
  const auto nodes = eng.live_nodes();  // youngest first
  const int n = core.n_obj, b = core.block, g = core.g();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeView& v = nodes[i];
    if (v.c_s > v.c_v + core.progress())
      rec.violation(t, "settled frontier passed transient start on node " + std::to_string(v.I_L));
    if (i + 1 < nodes.size()) {
      const NodeView& older = nodes[i + 1];
      if (older.c_s < v.c_s) rec.violation(t, "settled frontier not monotone at node " + std::to_string(v.I_L));
      if (v.rows_left > 0 && older.rows_left > 0 &&
          older.c_v - v.c_v != static_cast<int>(v.I_L - older.I_L) * b)
        rec.violation(t, "transient spacing broken at node " + std::to_string(v.I_L));
    }
    // |S(n)| counts n and every younger live node.
    const int s = static_cast<int>(i) + 1;
    if (v.c_s > 0 && v.c_s < n) {
      if (eng.erased_at(v.c_s - 1) > s + g || s + g > eng.erased_at(v.c_s))
        rec.violation(t, "survivor sandwich broken at node " + std::to_string(v.I_L));
    }
  }
  if (launched && nodes.size() >= 2 && nodes[1].c_s < launched->c_s0 - b)
    rec.violation(t, "launch frontier exceeds predecessor by more than one block");
  if constexpr (std::is_same_v<E, PartialExplicit>) {
    if (kind != EventKind::repair) {
      if (!eng.nested()) rec.violation(t, "intact sets not nested");
      if (!eng.virtual_prefix()) rec.violation(t, "virtual fragments not a prefix of the queue");
    }
  }
}

template <class E>
void drive_partial(const SystemConfig& cfg, FailureSource& src, Recorder& rec) {
  E eng(cfg);
  const bool monitor = cfg.derive;
  const ParamSet& P = cfg.params;
  const double slow = cfg.T_tot / cfg.n_obj;
  double t_rep = fast_interval(cfg, slow, eng.core().g());
  double t = 0.0;

  auto fill = [&](TraceRow& row) {
    row.f1N = eng.head_erased();
    row.g_vN = eng.core().g();
    row.h_vN = eng.h();
    row.x_v = eng.x_v();
    if (rec.result().stop_index >= 0) row.flags |= kFlagStopped;
  };

  while (!rec.capped()) {
    const FailureEvent* ev = src.peek();
    const bool fail = ev && ev->time <= t_rep;
    const double t_next = fail ? ev->time : t_rep;
    if (t_next > cfg.horizon) break;
    t = t_next;
    TraceRow row;
    row.t = t;
    std::optional<LaunchRecord> launched;
    bool halt = false;

    if (fail) {
      const FailureEvent e = *ev;
      src.pop();
      const auto r = eng.apply_failure_event(t, e.target);
      row.target = e.target;
      if (r.noop) {
        ++rec.result().noops;
        row.kind = EventKind::noop;
      } else {
        ++rec.result().failures;
        row.kind = EventKind::failure;
        row.node = r.slot;
      }
      fill(row);
      rec.row(row);
      if (r.carrier) {
        TraceRow v = row;
        v.kind = EventKind::virtual_loss;
        v.position = r.forwarded_to;
        v.regenerated = r.lost_transients;
        rec.row(v);
      }
    } else {
      if (eng.core().g() >= 1) {
        const auto r = eng.standard_repair_step(true);
        rec.standard(t, r.regenerated, r.reads);
        row.kind = EventKind::repair;
        row.position = r.position;
        row.reads = r.reads;
        row.regenerated = r.regenerated;
        if (r.unrecoverable) row.flags |= kUnrecoverable;
        const bool ready = eng.launch_ready();
        std::optional<PartialLaunch> L;
        if (ready) L = eng.complete_transitional(t);
        fill(row);
        rec.row(row);
        if (L) {
          ++rec.result().launches;
          rec.result().settled_dropped += L->dropped;
          rec.trial().launches.push_back(L->record);
          launched = L->record;
          TraceRow lr;
          lr.t = t;
          lr.kind = EventKind::launch;
          lr.node = L->slot;
          lr.position = L->record.c_s0;
          lr.regenerated = L->copied;
          if (L->dropped > 0) lr.flags |= kFlagDrop;
          bool newly_stopped = false;
          if (monitor) {
            const auto f = monitor_stopping(eng.core(), L->record.k, P.K_m_int, P.Z_m, P.beta_bar);
            if (!f.A_g) lr.flags |= kFlagAg;
            if (!f.A_Z) lr.flags |= kFlagAZ;
            if (!f.A_S) lr.flags |= kFlagAS;
            if (f.stopped() && rec.result().stop_index < 0) {
              rec.result().stop_index = L->record.k;
              rec.result().stop_time = t;
              newly_stopped = true;
            }
          }
          fill(lr);
          rec.row(lr);
          if (newly_stopped) {
            TraceRow sr = lr;
            sr.kind = EventKind::stop;
            rec.row(sr);
          }
        }
      } else if (cfg.ancillary_mode == AncillaryMode::ancillary) {
        const auto r = eng.ancillary_repair_step(true);
        rec.ancillary(r.regenerated, r.reads);
        rec.result().overwrites += r.overwrites;
        row.kind = EventKind::ancillary;
        row.position = r.dest;
        row.reads = r.reads;
        row.regenerated = r.regenerated;
        if (r.unrecoverable) row.flags |= kUnrecoverable;
        if (r.overwrites > 0) row.flags |= kFlagOverwrite;
        fill(row);
        rec.row(row);
      }
      t_rep += fast_interval(cfg, slow, eng.core().g());
    }
    if (cfg.check_lemmas) {
      const EventKind k = launched ? EventKind::launch : (fail ? EventKind::failure : row.kind);
      check_partial(eng, t, k, launched ? &*launched : nullptr, rec);
    }
    TraceRow base;
    fill(base);
    rec.trajectory(t, base.g_vN, base.h_vN, base.x_v);
    halt = rec.track_loss(t, eng, base);
    if (halt) break;
  }
  TrialResult& res = rec.result();
  res.end_time = res.halted ? t : cfg.horizon;

  // A loss at s must be followed by a stop no later than s + T_tot; losses
  // closer than T_tot to the end of the run are inconclusive.
  if (cfg.check_lemmas && monitor) {
    for (const auto& l : res.losses) {
      if (l.t + cfg.T_tot > res.end_time) continue;
      if (res.stop_time > l.t + cfg.T_tot)
        rec.violation(l.t, "data loss without a stopping event within one cycle");
    }
  }
}

// --------------------------------------------------------------- complete

template <class E>
void drive_complete(const SystemConfig& cfg, FailureSource& src, Recorder& rec) {
  E eng(cfg);
  const double inf = std::numeric_limits<double>::infinity();
  const double slow = cfg.T_tot / eng.slots_per_job();
  const int delta_N = cfg.N - cfg.k_c;
  double t_rep = inf;
  double t = 0.0;
  int peak = 0;

  auto fill = [&](TraceRow& row) {
    row.backlog = eng.backlog();
    row.g_vN = eng.backlog();
    row.E_max = eng.E_max();
    row.complete = eng.is_complete();
    row.f1N = eng.f1N();
    if (2 * eng.backlog() >= delta_N) row.flags |= kFlagSufficient;
  };

  while (!rec.capped()) {
    const FailureEvent* ev = src.peek();
    const bool fail = ev && ev->time <= t_rep;
    const double t_next = fail ? ev->time : t_rep;
    if (!(t_next <= cfg.horizon)) break;
    t = t_next;
    TraceRow row;
    row.t = t;
    if (fail) {
      const FailureEvent e = *ev;
      src.pop();
      const bool was_idle = eng.idle();
      const auto r = eng.apply_failure(e.target);
      row.target = e.target;
      if (r.noop) {
        ++rec.result().noops;
        row.kind = EventKind::noop;
      } else {
        ++rec.result().failures;
        row.kind = EventKind::failure;
        row.node = r.slot;
        row.group = r.slot;
        row.regenerated = r.virtual_erased;
        if (was_idle) t_rep = t + fast_interval(cfg, slow, eng.backlog());
        peak = std::max(peak, eng.backlog());
      }
      fill(row);
      rec.row(row);
    } else {
      const auto s = eng.repair_step();
      rec.result().dropped_ancillary += s.dropped;
      row.node = -1;
      row.group = s.group;
      row.position = s.position;
      row.regenerated = s.regenerated;
      switch (s.action) {
        case CompleteAction::standard:
          row.kind = EventKind::repair;
          row.reads = cfg.k_c;
          rec.standard(t, s.regenerated, cfg.k_c);
          break;
        case CompleteAction::ancillary:
          row.kind = EventKind::ancillary;
          row.reads = cfg.k_c;
          rec.ancillary(s.regenerated, cfg.k_c);
          break;
        case CompleteAction::idle:
          row.kind = EventKind::ancillary;
          row.flags |= kFlagDrop;
          break;
      }
      if (s.dropped > 0) row.flags |= kFlagDrop;
      fill(row);
      rec.row(row);
      if (s.launched_slot >= 0) {
        ++rec.result().launches;
        TraceRow lr;
        lr.t = t;
        lr.kind = EventKind::launch;
        lr.node = s.launched_slot;
        lr.group = s.launched_slot;
        fill(lr);
        rec.row(lr);
      }
      if (eng.idle()) {
        t_rep = inf;
        rec.result().busy_maxima.push_back(peak);
        peak = 0;
      } else {
        t_rep = t + fast_interval(cfg, slow, eng.backlog());
      }
    }
    rec.trajectory(t, eng.backlog(), 0, 0);
    TraceRow base;
    fill(base);
    if (rec.track_loss(t, eng, base)) break;
  }
  rec.result().end_time = rec.result().halted ? t : cfg.horizon;
}

template <class E>
Trial run_one(const SystemConfig& cfg, FailureSource src) {
  Trial out;
  Recorder rec(cfg, out);
  if constexpr (std::is_same_v<E, BasicExplicit> || std::is_same_v<E, BasicAggregate>) drive_basic<E>(cfg, src, rec);
  else if constexpr (std::is_same_v<E, PartialExplicit> || std::is_same_v<E, PartialAggregate>)
    drive_partial<E>(cfg, src, rec);
  else drive_complete<E>(cfg, src, rec);
  return out;
}

template <class Ex, class Ag>
Trial run_scheme(const SystemConfig& cfg, const FailureSource& src) {
  if (cfg.engine == EngineKind::explicit_sets) return run_one<Ex>(cfg, src);
  if (cfg.engine == EngineKind::aggregate) return run_one<Ag>(cfg, src);
  Trial a = run_one<Ex>(cfg, src);
  Trial b = run_one<Ag>(cfg, src);
  const std::size_t n = std::min(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a.trace[i] == b.trace[i]))
      throw EquivalenceError("engines diverge at row " + std::to_string(i) + ": explicit {" + describe(a.trace[i]) +
                                 "} aggregate {" + describe(b.trace[i]) + "}",
                             static_cast<long>(i));
  }
  if (a.trace.size() != b.trace.size())
    throw EquivalenceError("engines produced traces of different length", static_cast<long>(n));
  // Lemma checks may differ in coverage between engines; the explicit run
  // is the reference.
  b.result.invariant_violations = a.result.invariant_violations;
  b.result.violation_notes = a.result.violation_notes;
  if (!(a.result == b.result)) throw EquivalenceError("engines agree on rows but not on totals", static_cast<long>(n));
  return a;
}

Trial dispatch(SystemConfig cfg, std::uint64_t seed, const FailureSource& src) {
  if (!cfg.resolved) resolve(cfg);
  Trial out;
  switch (cfg.scheme) {
    case Scheme::basic:
      out = run_scheme<BasicExplicit, BasicAggregate>(cfg, src);
      break;
    case Scheme::partial:
      out = run_scheme<PartialExplicit, PartialAggregate>(cfg, src);
      break;
    case Scheme::complete:
      out = run_scheme<CompleteExplicit, CompleteAggregate>(cfg, src);
      break;
  }
  out.result.seed = seed;
  return out;
}

}  // namespace

Trial run_trial(const SystemConfig& cfg, std::uint64_t seed) {
  SystemConfig c = cfg;
  if (!c.resolved) resolve(c);
  FailureSource src(RandomStream(seed, kFailureStream), c.lambda * c.N, c.N);
  return dispatch(c, seed, src);
}

Trial run_trial(const SystemConfig& cfg, std::uint64_t seed, const FailureScript& script) {
  if (script.N != cfg.N) throw ParameterError("script was recorded for a different N");
  script.check();
  return dispatch(cfg, seed, FailureSource(script));
}

FailureScript script_from_trace(const std::vector<TraceRow>& trace, int N) {
  FailureScript s;
  s.N = N;
  for (const auto& r : trace)
    if (r.kind == EventKind::failure || r.kind == EventKind::noop) s.events.push_back({r.t, r.target});
  return s;
}

// --------------------------------------------------------------- ensemble

EnsembleSummary run_ensemble(const SystemConfig& cfg_in, int seed_count, int parallelism) {
  if (seed_count < 1) throw ParameterError("run_ensemble: seed_count must be at least 1");
  SystemConfig cfg = cfg_in;
  if (!cfg.resolved) resolve(cfg);
  std::vector<TrialResult> results(seed_count);
  std::vector<std::exception_ptr> errors(seed_count);
  const int workers = std::clamp(parallelism, 1, seed_count);

  auto work = [&](int w) {
    for (int i = w; i < seed_count; i += workers) {
      try {
        Trial t = run_trial(cfg, cfg.seed + static_cast<std::uint64_t>(i));
        t.result.trajectory.clear();
        results[i] = std::move(t.result);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EnsembleSummary s;
  s.cfg = cfg;
  s.trials = seed_count;
  double sum = 0, sumsq = 0, lsum = 0, lsumsq = 0;
  for (const auto& r : results) {
    s.measured += r.measured;
    sum += r.measured_sum;
    sumsq += r.measured_sumsq;
    if (s.regen_hist.size() < r.regen_hist.size()) s.regen_hist.resize(r.regen_hist.size(), 0);
    for (std::size_t i = 0; i < r.regen_hist.size(); ++i) s.regen_hist[i] += r.regen_hist[i];
    s.total_losses += static_cast<long>(r.losses.size());
    s.total_time += r.end_time;
    if (!r.losses.empty()) {
      ++s.loss_trials;
      lsum += r.losses.front().t;
      lsumsq += r.losses.front().t * r.losses.front().t;
    }
    for (int m : r.busy_maxima) {
      ++s.busy_periods;
      if (static_cast<int>(s.busy_hist.size()) <= m) s.busy_hist.resize(m + 1, 0);
      ++s.busy_hist[m];
    }
    s.violations += r.invariant_violations;
    s.repairs += r.repairs;
    s.reads_total += r.reads_total;
  }
  if (s.measured > 0) {
    s.regen_mean = sum / s.measured;
    const double var = s.measured > 1 ? (sumsq - sum * s.regen_mean) / (s.measured - 1) : 0.0;
    s.regen_se_iid = std::sqrt(std::max(0.0, var) / s.measured);
    // Repairs within one trial share failures, so the honest error bar comes
    // from the spread of per-trial means (ratio estimator over trials).
    int k = 0;
    double dev = 0;
    for (const auto& r : results)
      if (r.measured > 0) {
        ++k;
        const double d = r.measured_sum - s.regen_mean * r.measured;
        dev += d * d;
      }
    const double mbar = static_cast<double>(s.measured) / std::max(k, 1);
    s.regen_se = k > 1 ? std::sqrt(dev / (static_cast<double>(k) * (k - 1))) / mbar : s.regen_se_iid;
  }
  if (s.loss_trials > 0) {
    s.loss_time_mean = lsum / s.loss_trials;
    const double var = s.loss_trials > 1 ? (lsumsq - lsum * s.loss_time_mean) / (s.loss_trials - 1) : 0.0;
    s.loss_time_se = std::sqrt(std::max(0.0, var) / s.loss_trials);
  }
  s.results = std::move(results);
  return s;
}

// ------------------------------------------------------------- validation

namespace {

BoundRow lower_row(std::string name, double analytic, double emp, double se, std::string note) {
  BoundRow r{std::move(name), analytic, emp, se, 0.0, false, std::move(note)};
  r.margin_se = se > 0 ? (emp - analytic) / se : (emp >= analytic ? INFINITY : -INFINITY);
  r.pass = emp + 3.0 * se >= analytic;
  return r;
}

BoundRow upper_row(std::string name, double analytic, double emp, double se, std::string note) {
  BoundRow r{std::move(name), analytic, emp, se, 0.0, false, std::move(note)};
  r.margin_se = se > 0 ? (analytic - emp) / se : (emp <= analytic ? INFINITY : -INFINITY);
  r.pass = emp <= analytic + 3.0 * se;
  return r;
}

BoundRow two_sided_row(std::string name, double analytic, double emp, double se, std::string note) {
  BoundRow r{std::move(name), analytic, emp, se, 0.0, false, std::move(note)};
  r.margin_se = se > 0 ? 3.0 - std::abs(emp - analytic) / se : (emp == analytic ? INFINITY : -INFINITY);
  r.pass = std::abs(emp - analytic) <= 3.0 * se;
  return r;
}

}  // namespace

BoundReport validate_bounds(const EnsembleSummary& s) {
  BoundReport out;
  if (s.trials == 0) return out;
  const SystemConfig& c = s.cfg;
  if (s.violations > 0 || s.trials > 0) {
    BoundRow r{"invariant_violations", 0.0, static_cast<double>(s.violations), 0.0, 0.0, s.violations == 0,
               "must be zero"};
    out.push_back(r);
  }

  if (c.scheme == Scheme::basic) {
    if (s.measured > 0)
      out.push_back(two_sided_row("regenerated_per_repair", expected_erased(c.N, c.lambda * c.T_tot, 1.0), s.regen_mean,
                                  s.regen_se, "N (1 - exp(-lambda T_tot))"));
    if (c.halt_on_loss && s.loss_trials > 0) {
      const auto b = mttdl_lower_bound_basic(c.N, c.k_c, c.lambda, c.T_tot);
      out.push_back(lower_row("mttdl", b.value, s.loss_time_mean, s.loss_time_se,
                              std::to_string(s.loss_trials) + " of " + std::to_string(s.trials) + " trials lost data"));
    }
  } else if (c.scheme == Scheme::partial) {
    if (s.measured > 0) {
      const auto sched = derive_schedule(c);
      const double delta = c.delta > 0 ? c.delta : static_cast<double>(c.N - c.k_c) / c.N;
      const double a =
          partial_mean_regenerated(c.N, delta, c.lambda * c.T_tot, c.beta_vN, c.lambda * sched.dt);
      BoundRow r{"regenerated_per_repair", a, s.regen_mean, s.regen_se, 0.0, false, "relative tolerance 5%"};
      r.margin_se = s.regen_se > 0 ? (0.05 * a - std::abs(s.regen_mean - a)) / s.regen_se : 0.0;
      r.pass = std::abs(s.regen_mean - a) <= 0.05 * a;
      out.push_back(r);
    }
  } else {
    if (s.busy_periods > 0) {
      const double nu = solve_nu(c.gamma);
      for (int m = 1; m <= 5; ++m) {
        long exceed = 0;
        for (std::size_t k = 0; k < s.busy_hist.size(); ++k)
          if (static_cast<int>(k) - 1 > m) exceed += s.busy_hist[k];
        const double p = static_cast<double>(exceed) / s.busy_periods;
        const double bound = std::exp(-nu * m);
        const double se = std::sqrt(bound * (1 - bound) / s.busy_periods);
        out.push_back(upper_row("excursion_m" + std::to_string(m), bound, p, se, "P(peak waiting > m)"));
      }
    }
    if (c.halt_on_loss && s.loss_trials > 0) {
      const double delta = static_cast<double>(c.N - c.k_c) / c.N;
      const auto b = mttdl_lower_bound_complete(c.N, delta, c.gamma, c.lambda, c.T_tot);
      out.push_back(lower_row("mttdl", b.half_delta, s.loss_time_mean, s.loss_time_se, "excursion-bound reading"));
    }
  }
  return out;
}

std::vector<int> md1_busy_period_maxima(double gamma, long count, std::uint64_t seed) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("md1_busy_period_maxima: gamma must lie in (0, 1)");
  RandomStream rng(seed, kFailureStream);
  std::vector<int> out;
  out.reserve(count);
  for (long b = 0; b < count; ++b) {
    // Service time gamma, arrivals at rate 1; waiting = in system - 1.
    int in_system = 1, peak = 0;
    double next_arrival = sample_lifetime(rng, 1.0);
    double next_done = gamma;
    while (in_system > 0) {
      if (next_arrival < next_done) {
        ++in_system;
        peak = std::max(peak, in_system - 1);
        next_arrival += sample_lifetime(rng, 1.0);
      } else {
        --in_system;
        next_done += gamma;
      }
    }
    out.push_back(peak);
  }
  return out;
}

// ------------------------------------------------------------ codec check

CodecCheck end_to_end_codec_check(const SystemConfig& cfg_in, const FailureScript& script) {
  SystemConfig cfg = cfg_in;
  cfg.scheme = Scheme::basic;
  if (!cfg.resolved) resolve(cfg);
  if (cfg.N > 16 || cfg.n_obj > 32) throw ParameterError("codec check is limited to N <= 16 and n_obj <= 32");
  if (script.N != cfg.N) throw ParameterError("script was recorded for a different N");
  script.check();

  const CodeSpec code(cfg.k_c, cfg.N);
  const int bytes = cfg.k_c * 16;
  RandomStream rng(cfg.seed, kPayloadStream);
  BasicExplicit eng(cfg);

  // Object ids are stable; frags[id][slot] is empty once erased.
  std::vector<std::vector<std::uint8_t>> original(cfg.n_obj);
  std::vector<std::vector<std::vector<std::uint8_t>>> frags(cfg.n_obj);
  for (int o = 0; o < cfg.n_obj; ++o) {
    original[o].resize(bytes);
    for (auto& x : original[o]) x = static_cast<std::uint8_t>(rng.next_u64());
    for (auto& f : encode(original[o], code)) frags[o].push_back(std::move(f.payload));
  }

  CodecCheck out;
  const double dt = cfg.T_tot / cfg.n_obj;
  double t_rep = dt;
  std::size_t next = 0;
  auto agree = [&](int pos) {
    const int o = eng.object_at(pos);
    for (int s = 0; s < cfg.N; ++s)
      if (eng.holds(pos, s) != !frags[o][s].empty()) return false;
    return true;
  };

  while (true) {
    const bool fail = next < script.events.size() && script.events[next].time <= t_rep;
    const double t = fail ? script.events[next].time : t_rep;
    if (t > cfg.horizon) break;
    ++out.events;
    if (fail) {
      const auto r = eng.apply_failure(script.events[next++].target);
      for (int o = 0; o < cfg.n_obj; ++o) frags[o][r.slot].clear();
      continue;
    }
    t_rep += dt;
    const int head = cfg.n_obj - 1;
    const int o = eng.object_at(head);
    if (!agree(head)) ++out.mismatches;
    std::vector<Fragment> have;
    for (int s = 0; s < cfg.N; ++s)
      if (!frags[o][s].empty()) have.push_back({s, frags[o][s]});
    ++out.decodes;
    std::vector<std::uint8_t> data;
    const bool enough = static_cast<int>(have.size()) >= cfg.k_c;
    try {
      data = decode(have, code);
      if (!enough || data != original[o]) ++out.mismatches;
    } catch (const UnrecoverableError&) {
      if (enough) ++out.mismatches;
      else ++out.unrecoverable;
      data = original[o];  // restore from outside so the run can continue
    }
    for (int s = 0; s < cfg.N; ++s) {
      if (!frags[o][s].empty()) continue;
      frags[o][s] = enough ? regenerate(s, have, code).payload : encode(data, code)[s].payload;
    }
    eng.repair_head(true);
    ++out.repairs;
    if (!agree(0)) ++out.mismatches;
  }
  out.pass = out.mismatches == 0;
  if (!out.pass) throw IntegrityError("codec check: " + std::to_string(out.mismatches) + " byte or bookkeeping mismatches");
  return out;
}

CodecCheck end_to_end_codec_check(const SystemConfig& cfg_in) {
  SystemConfig cfg = cfg_in;
  cfg.scheme = Scheme::basic;
  if (!cfg.resolved) resolve(cfg);
  RandomStream rng(cfg.seed, kFailureStream);
  return end_to_end_codec_check(cfg, generate_script(rng, cfg.lambda * cfg.N, cfg.N, cfg.horizon));
}

}  // namespace liquid
