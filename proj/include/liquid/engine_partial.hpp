#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "liquid/config.hpp"
#include "liquid/engine_basic.hpp"
#include "liquid/trace.hpp"

namespace liquid {

// Launch bookkeeping shared by both partial engines: node positions,
// launch indices and the transitional node. Object state lives in the
// engines themselves.
struct NodeInfo {
  long I_L = 0;
  int slot = -1;
  bool exists = false;  // false for initial indices that failed before t=0
  bool alive = false;
  double tau_L = 0.0;
  double tau_F = std::numeric_limits<double>::infinity();
  int c_s0 = 0;  // settled frontier at launch (objects)
  int c_v0 = 0;  // transient start at launch (objects)
};

class PartialCore {
 public:
  explicit PartialCore(const SystemConfig& cfg);

  int N, n_obj, k_c, block, beta_vN, delta_N;
  double dt;         // Delta_t
  double lambda_dt;  // lambda * Delta_t

  int g() const { return static_cast<int>(empties_.size()); }
  int progress() const { return progress_; }
  long next_index() const { return next_k_; }
  bool has_transitional() const { return !empties_.empty(); }
  int transitional_slot() const { return empties_.front(); }
  // I_L of live launched nodes, youngest first.
  const std::vector<long>& launched() const { return launched_; }
  const NodeInfo& node(long I_L) const;
  bool known(long I_L) const { return I_L >= base_ && I_L < next_k_; }
  long first_index() const { return base_; }
  long table_index(long I_L) const { return I_L - base_; }
  long table_size() const { return next_k_ - base_; }
  // Settled frontier of an initial node of launch depth d (exists or not).
  int initial_frontier(long d) const;
  int survivor_count(long I_L) const;

  // Launch index of the target, or nothing for empty and transitional
  // slots. Initial nodes carry indices <= 0.
  std::optional<long> resolve_target(int Y) const;
  void kill(long I_L, double t);
  long launch(double t, int c_s0, int c_v0);
  void advance_progress() { ++progress_; }

 private:
  NodeInfo& mut(long I_L) { return table_[I_L - base_]; }
  std::deque<int> empties_;  // front = transitional (node position g-1)
  std::vector<long> launched_;
  std::vector<NodeInfo> table_;
  long base_ = 0;
  long next_k_ = 1;
  int progress_ = 0;
  friend class PartialAggregate;
  friend class PartialExplicit;
};

// Static condition under which the drop rule can never fire.
bool partial_no_drop(int beta_vN, int block, int n_obj);

struct NodeView {
  long I_L = 0;
  int slot = -1;
  int c_s = 0;
  int c_v = 0;  // n_obj - transient fragments held
  int rows_left = 0;
};

struct PartialFailure {
  bool noop = true;
  int slot = -1;
  long I_L = 0;
  int newly_erased = 0;
  bool carrier = false;
  int forwarded = 0;         // objects moved to the top of the virtual region
  int lost_transients = 0;
  int forwarded_to = -1;     // first position of the forwarded block
};

struct PartialLaunch {
  LaunchRecord record;
  int slot = -1;
  int copied = 0;
  int dropped = 0;
};

class PartialAggregate {
 public:
  explicit PartialAggregate(const SystemConfig& cfg);

  PartialFailure apply_failure_event(double t, int Y);
  RepairRecord standard_repair_step(bool allow_loss = true);
  bool launch_ready() const { return core_.progress() == core_.block; }
  PartialLaunch complete_transitional(double t);
  RepairRecord ancillary_repair_step(bool allow_loss = true);

  int erased_at(int pos) const;
  int head_erased() const { return erased_at(core_.n_obj - 1); }
  std::optional<LossRecord> detect_data_loss() const;
  int h() const;
  int x_v() const { return core_.beta_vN > 0 ? core_.progress() + h() * core_.block : 0; }
  std::vector<NodeView> live_nodes() const;
  const PartialCore& core() const { return core_; }
  int survivor_count(long I_L) const { return core_.survivor_count(I_L); }

 private:
  PartialCore core_;
  std::vector<int> c_s_;   // by table index
  std::vector<int> rows_;  // by table index
  int rows_at(int pos) const;
};

class PartialExplicit {
 public:
  explicit PartialExplicit(const SystemConfig& cfg);

  PartialFailure apply_failure_event(double t, int Y);
  RepairRecord standard_repair_step(bool allow_loss = true);
  bool launch_ready() const { return core_.progress() == core_.block; }
  PartialLaunch complete_transitional(double t);
  RepairRecord ancillary_repair_step(bool allow_loss = true);

  int erased_at(int pos) const;
  int head_erased() const { return erased_at(core_.n_obj - 1); }
  std::optional<LossRecord> detect_data_loss() const;
  int h() const;
  int x_v() const;  // objects holding virtual fragments, counted directly
  std::vector<NodeView> live_nodes() const;
  const PartialCore& core() const { return core_; }
  int survivor_count(long I_L) const { return core_.survivor_count(I_L); }

  // Structural checks used by the invariant suite.
  bool nested() const;                 // intact symbol sets ordered by inclusion
  bool virtual_prefix() const;         // objects with virtual fragments are exactly [0, x_v)
  bool settled_contiguous(int slot) const;
  int settled_count(int slot) const { return held_[slot]; }
  bool holds(int pos, int slot) const;
  int virtual_count(int pos) const;
  int object_at(int pos) const { return order_[pos]; }

 private:
  std::uint64_t* bits(int obj) { return &settled_[static_cast<std::size_t>(obj) * words_]; }
  const std::uint64_t* bits(int obj) const { return &settled_[static_cast<std::size_t>(obj) * words_]; }
  bool has(int obj, int slot) const { return (bits(obj)[slot / 64] >> (slot % 64)) & 1u; }
  void set(int obj, int slot);
  void clear(int obj, int slot);
  int intact(int obj) const;
  void stable_move(int from, int to);

  PartialCore core_;
  int words_;
  std::vector<int> order_;  // object id at each position, 0 = tail
  std::vector<std::uint64_t> settled_;
  std::vector<int> virt_;     // virtual fragment count per object
  std::vector<long> carrier_; // I_L whose node stores the transients; kTrans or kNone
  std::vector<int> held_;     // settled fragments per slot
  std::vector<std::vector<int>> blocks_;  // by table index: object ids, insertion order
  std::vector<int> trans_block_;
  static constexpr long kNone = std::numeric_limits<long>::min();
  static constexpr long kTrans = std::numeric_limits<long>::min() + 1;
};

// Stopping events evaluated right after launch k.
struct StopFlags {
  bool A_g = true, A_Z = true, A_S = true;
  bool stopped() const { return !(A_g && A_Z && A_S); }
};
StopFlags monitor_stopping(const PartialCore& core, long k, int K_m, double Z_m, double beta_bar);

}  // namespace liquid
