#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "liquid/config.hpp"

namespace liquid {

struct RepairRecord {
  int position = -1;  // queue position the object was repaired from
  int dest = 0;       // position it re-enters at (0 except partial ancillary)
  int reads = 0;
  int regenerated = 0;
  bool unrecoverable = false;
  int overwrites = 0;  // partial ancillary only
};

struct FailureRecord {
  int slot = -1;          // physical node slot that failed, -1 for a no-op
  int newly_erased = 0;   // settled fragments lost
};

struct LossRecord {
  int position = -1;  // lowest queue position with too many erasures
  int erased = 0;
};

// Objects are kept in a ring so that moving the head to the tail is O(1):
// position p lives at index (offset + p) mod n.
class ObjectRing {
 public:
  explicit ObjectRing(int n = 0) : n_(n) {}
  int size() const { return n_; }
  int index(int pos) const { return (offset_ + pos) % n_; }
  int position(int idx) const { return (idx - offset_ + n_) % n_; }
  void rotate_head_to_tail() { offset_ = (offset_ + n_ - 1) % n_; }

 private:
  int n_ = 0;
  int offset_ = 0;
};

// Basic liquid queue with full per-object erasure sets over node slots.
class BasicExplicit {
 public:
  explicit BasicExplicit(const SystemConfig& cfg);

  FailureRecord apply_failure(int age_index);
  // allow_loss=false turns an unrecoverable head into a DataLossError.
  RepairRecord repair_head(bool allow_loss = true);
  std::optional<LossRecord> detect_data_loss() const;

  int erased_at(int pos) const;
  int head_erased() const { return erased_at(n_obj_ - 1); }
  bool holds(int pos, int slot) const;
  int object_at(int pos) const;  // stable object id
  bool nested() const;
  const std::vector<int>& age_order() const { return age_; }
  long repairs_done() const { return repairs_; }
  int N() const { return N_; }
  int n_obj() const { return n_obj_; }

 private:
  std::uint64_t* bits(int pos) { return &erased_[static_cast<std::size_t>(ring_.index(pos)) * words_]; }
  const std::uint64_t* bits(int pos) const {
    return &erased_[static_cast<std::size_t>(ring_.index(pos)) * words_];
  }

  int N_, k_c_, n_obj_, words_;
  ObjectRing ring_;
  std::vector<std::uint64_t> erased_;
  std::vector<int> object_id_;  // by ring index
  std::vector<int> age_;        // slot at each y-position, 0 = youngest
  long repairs_ = 0;
};

// Same queue stored as one frontier per node: the number of tail objects
// that hold an intact fragment on it.
class BasicAggregate {
 public:
  explicit BasicAggregate(const SystemConfig& cfg);

  FailureRecord apply_failure(int age_index);
  RepairRecord repair_head(bool allow_loss = true);
  std::optional<LossRecord> detect_data_loss() const;

  int erased_at(int pos) const;
  int head_erased() const { return erased_at(n_obj_ - 1); }
  const std::vector<int>& frontier() const { return c_; }
  const std::vector<int>& age_order() const { return age_; }
  long repairs_done() const { return repairs_; }
  int N() const { return N_; }
  int n_obj() const { return n_obj_; }

 private:
  int N_, k_c_, n_obj_;
  std::vector<int> c_;    // by slot
  std::vector<int> age_;
  long repairs_ = 0;
};

}  // namespace liquid
