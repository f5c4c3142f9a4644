#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "liquid/config.hpp"
#include "liquid/engine_basic.hpp"

namespace liquid {

// Symbols of the [N + beta_vN, k_c] code are either launched (stored on a
// live node as settled fragments) or sit in the virtual list L. L is ordered:
// the first g entries are the symbols of pending replacement nodes, in
// backlog order, then the virtual rows. A normal object holds every launched
// symbol plus a prefix of L; an object whose group node failed holds no L
// symbol until its ancillary repair.
struct CompleteJob {
  int slot = -1;
  int symbol = -1;  // symbol the replacement node will carry
  int E = 0;        // backlog length when the node failed
  long R_F = 0;     // failure counter just after the failure
  int std_done = 0;
  int anc_next = 0;  // next group member (by id / N) for ancillary repair
  int slots_used = 0;  // synchronized policy
  int extra = 0;       // launched symbols the group's unrepaired objects lack
};

struct CompleteFailure {
  bool noop = true;
  int slot = -1;
  int symbol = -1;
  int E = 0;
  int settled_erased = 0;
  int virtual_erased = 0;
};

enum class CompleteAction { standard, ancillary, idle };

struct CompleteStep {
  CompleteAction action = CompleteAction::idle;
  int object = -1;
  int position = -1;
  int group = -1;
  int regenerated = 0;
  int dropped = 0;        // ancillary repairs skipped as duplicates
  int launched_slot = -1;  // set when this step completed the head job
};

struct SafetyReport {
  bool sufficient_violated = false;  // 2 g_vN >= delta N
  bool actual_loss = false;
  int worst_erased = 0;
};

// Per-position view used to compare states up to symbol relabelling.
struct CanonicalEntry {
  int access_erased = 0;
  int virtual_held = 0;
  bool prefix = true;
  friend bool operator==(const CanonicalEntry&, const CanonicalEntry&) = default;
};

class CompleteBase {
 public:
  explicit CompleteBase(const SystemConfig& cfg);
  virtual ~CompleteBase() = default;

  // Y is a uniform draw from [0, N): values below the backlog hit pending
  // nodes (immune), the rest index launched nodes youngest first.
  CompleteFailure apply_failure(int Y);
  // Throws SequencingError when the backlog is empty (repair suspended).
  CompleteStep repair_step();

  bool idle() const { return jobs_.empty(); }
  int backlog() const { return static_cast<int>(jobs_.size()); }
  const std::deque<CompleteJob>& jobs() const { return jobs_; }
  int group_of(int object) const { return object % N_; }
  int object_at(int pos) const { return ring_.index(pos); }
  int staircase(int pos) const;  // virtual fragments per object in the complete state
  int job_repairs() const { return w_; }
  int group_size() const { return m_; }
  int slots_per_job() const { return w_ + m_; }
  int launched_count() const { return static_cast<int>(age_.size()); }

  int erased_at(int pos) const { return N_ - held_count(object_at(pos)); }
  int access_erased_at(int pos) const { return access_erased(object_at(pos)); }
  int virtual_at(int pos) const { return virtual_held(object_at(pos)); }
  int f1N() const { return erased_at(n_obj_ - 1); }
  virtual int E_max() const = 0;
  virtual int worst_erased() const = 0;

  bool is_complete() const;
  std::vector<CanonicalEntry> canonical() const;
  SafetyReport check_safety() const;
  std::optional<LossRecord> detect_data_loss() const;

  int N() const { return N_; }
  int n_obj() const { return n_obj_; }

 protected:
  virtual int held_count(int object) const = 0;
  virtual int access_erased(int object) const = 0;
  virtual int virtual_held(int object) const = 0;
  virtual bool prefix_form(int object) const = 0;

  virtual int on_failure(int slot, int sigma, const CompleteJob& job, int& virtual_erased) = 0;
  virtual bool ancillary_needed(int object, const CompleteJob& job) const = 0;
  virtual int on_ancillary(int object, const CompleteJob& job) = 0;
  virtual int on_standard(int object) = 0;
  virtual void on_launch(int /*slot*/, int /*symbol*/) {}

  // Pending symbols a normal object holds as virtual fragments. A standard
  // repair writes the transitional symbol and the beta_vN after it; each
  // launch retires the front one.
  int prefix_of(int object) const { return static_cast<int>(beta_vN_ + 1 - (launches_ - Lrep_[object])); }
  const CompleteJob* job_for_slot(int slot) const;

  int N_, k_c_, n_obj_, beta_vN_, w_, m_;
  CompletePolicy policy_;
  ObjectRing ring_;
  std::vector<int> symbol_of_;  // by slot
  std::vector<char> launched_;  // by slot
  std::vector<long> launch_R_;  // R at the slot's last launch
  std::vector<int> age_;        // launched slots, youngest first
  std::deque<int> L_;
  long R_ = 0;  // failures so far, offset so initial repair counters are positive
  long launches_ = 0;
  std::vector<long> Lrep_;  // launch count at each object's last standard repair
  std::deque<CompleteJob> jobs_;

 private:
  CompleteStep standard_step();
  void complete_head(CompleteStep& step);
  bool synchronized_slot_is_ancillary(int k) const;
};

// Per-object bitsets over code symbols.
class CompleteExplicit final : public CompleteBase {
 public:
  explicit CompleteExplicit(const SystemConfig& cfg);
  int E_max() const override;
  int worst_erased() const override;
  bool holds(int object, int symbol) const;

 protected:
  int held_count(int object) const override;
  int access_erased(int object) const override;
  int virtual_held(int object) const override;
  bool prefix_form(int object) const override;
  int on_failure(int slot, int sigma, const CompleteJob& job, int& virtual_erased) override;
  bool ancillary_needed(int object, const CompleteJob& job) const override;
  int on_ancillary(int object, const CompleteJob& job) override;
  int on_standard(int object) override;

 private:
  std::uint64_t* row(int o) { return &held_[static_cast<std::size_t>(o) * words_]; }
  const std::uint64_t* row(int o) const { return &held_[static_cast<std::size_t>(o) * words_]; }
  std::vector<std::uint64_t> launched_mask() const;

  int words_;
  std::vector<std::uint64_t> held_;
  std::vector<long> Rrep_;  // by object
};

// Only one repair counter per object; symbol sets follow from the job list.
class CompleteAggregate final : public CompleteBase {
 public:
  explicit CompleteAggregate(const SystemConfig& cfg);
  int E_max() const override;
  int worst_erased() const override;

 protected:
  int held_count(int object) const override;
  int access_erased(int object) const override;
  int virtual_held(int object) const override;
  bool prefix_form(int) const override { return true; }
  int on_failure(int slot, int sigma, const CompleteJob& job, int& virtual_erased) override;
  bool ancillary_needed(int object, const CompleteJob& job) const override;
  int on_ancillary(int object, const CompleteJob& job) override;
  int on_standard(int object) override;

 private:
  // Job whose group loss still affects the object, if any.
  const CompleteJob* affecting(int object) const;
  int affected_in(const CompleteJob& job) const;

  std::vector<long> Rrep_;
};

}  // namespace liquid
