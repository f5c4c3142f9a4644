#include "liquid/engine_basic.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

void check_basic(const SystemConfig& cfg) {
  if (cfg.N < 1 || cfg.N > 4096) throw ParameterError("basic engine: N must lie in [1, 4096]");
  if (cfg.k_c >= cfg.N) throw ParameterError("basic engine: need k_c < N");
  if (cfg.k_c < 1) throw ParameterError("basic engine: need k_c >= 1");
  if (cfg.n_obj < 1) throw ParameterError("basic engine: need n_obj >= 1");
}

// Failed node leaves its y-position; everything younger shifts up and the
// empty replacement enters at y-position 0.
int move_to_front(std::vector<int>& age, int age_index) {
  if (age_index < 0 || age_index >= static_cast<int>(age.size()))
    throw ParameterError("node age index out of range");
  const int slot = age[age_index];
  std::rotate(age.begin(), age.begin() + age_index, age.begin() + age_index + 1);
  return slot;
}

}  // namespace

BasicExplicit::BasicExplicit(const SystemConfig& cfg) : N_(cfg.N), k_c_(cfg.k_c), n_obj_(cfg.n_obj) {
  check_basic(cfg);
  words_ = (N_ + 63) / 64;
  ring_ = ObjectRing(n_obj_);
  erased_.assign(static_cast<std::size_t>(n_obj_) * words_, 0);
  object_id_.resize(n_obj_);
  for (int i = 0; i < n_obj_; ++i) object_id_[i] = i;
  age_.resize(N_);
  for (int i = 0; i < N_; ++i) age_[i] = i;
}

FailureRecord BasicExplicit::apply_failure(int age_index) {
  FailureRecord rec;
  rec.slot = move_to_front(age_, age_index);
  const std::uint64_t mask = std::uint64_t{1} << (rec.slot % 64);
  const int w = rec.slot / 64;
  for (int p = 0; p < n_obj_; ++p) {
    std::uint64_t& word = bits(p)[w];
    if (!(word & mask)) {
      word |= mask;
      ++rec.newly_erased;
    }
  }
  return rec;
}

RepairRecord BasicExplicit::repair_head(bool allow_loss) {
  RepairRecord rec;
  rec.position = n_obj_ - 1;
  rec.regenerated = head_erased();
  rec.unrecoverable = rec.regenerated > N_ - k_c_;
  if (rec.unrecoverable && !allow_loss)
    throw DataLossError("head object has fewer than k_c intact fragments", rec.position);
  rec.reads = k_c_;
  std::fill_n(bits(n_obj_ - 1), words_, 0);
  ring_.rotate_head_to_tail();
  ++repairs_;
  return rec;
}

int BasicExplicit::erased_at(int pos) const {
  int n = 0;
  const std::uint64_t* b = bits(pos);
  for (int w = 0; w < words_; ++w) n += std::popcount(b[w]);
  return n;
}

bool BasicExplicit::holds(int pos, int slot) const {
  return !((bits(pos)[slot / 64] >> (slot % 64)) & 1u);
}

int BasicExplicit::object_at(int pos) const { return object_id_[ring_.index(pos)]; }

std::optional<LossRecord> BasicExplicit::detect_data_loss() const {
  for (int p = 0; p < n_obj_; ++p) {
    const int e = erased_at(p);
    if (e > N_ - k_c_) return LossRecord{p, e};
  }
  return std::nullopt;
}

bool BasicExplicit::nested() const {
  for (int p = 0; p + 1 < n_obj_; ++p) {
    const std::uint64_t* a = bits(p);
    const std::uint64_t* b = bits(p + 1);
    for (int w = 0; w < words_; ++w)
      if (a[w] & ~b[w]) return false;
  }
  return true;
}

BasicAggregate::BasicAggregate(const SystemConfig& cfg) : N_(cfg.N), k_c_(cfg.k_c), n_obj_(cfg.n_obj) {
  check_basic(cfg);
  c_.assign(N_, n_obj_);
  age_.resize(N_);
  for (int i = 0; i < N_; ++i) age_[i] = i;
}

FailureRecord BasicAggregate::apply_failure(int age_index) {
  FailureRecord rec;
  rec.slot = move_to_front(age_, age_index);
  rec.newly_erased = c_[rec.slot];
  c_[rec.slot] = 0;
  return rec;
}

RepairRecord BasicAggregate::repair_head(bool allow_loss) {
  RepairRecord rec;
  rec.position = n_obj_ - 1;
  rec.regenerated = head_erased();
  rec.unrecoverable = rec.regenerated > N_ - k_c_;
  if (rec.unrecoverable && !allow_loss)
    throw DataLossError("head object has fewer than k_c intact fragments", rec.position);
  rec.reads = k_c_;
  for (int& c : c_) c = std::min(c + 1, n_obj_);
  ++repairs_;
  return rec;
}

int BasicAggregate::erased_at(int pos) const {
  int n = 0;
  for (int c : c_) n += (c <= pos);
  return n;
}

std::optional<LossRecord> BasicAggregate::detect_data_loss() const {
  // erased(p) > r  iff  the (r+1)-th smallest frontier is <= p.
  const int r = N_ - k_c_;
  std::vector<int> c = c_;
  std::nth_element(c.begin(), c.begin() + r, c.end());
  const int p = c[r];
  if (p >= n_obj_) return std::nullopt;
  return LossRecord{p, erased_at(p)};
}

}  // namespace liquid
