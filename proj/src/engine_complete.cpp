#include "liquid/engine_complete.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "liquid/errors.hpp"

namespace liquid {

CompleteBase::CompleteBase(const SystemConfig& cfg)
    : N_(cfg.N),
      k_c_(cfg.k_c),
      n_obj_(cfg.n_obj),
      beta_vN_(cfg.beta_vN),
      policy_(cfg.complete_policy),
      ring_(cfg.n_obj) {
  if (N_ < 2 || k_c_ < 1 || k_c_ >= N_) throw ConfigError("complete scheme needs 1 <= k_c < N");
  if (beta_vN_ < 1) throw ConfigError("complete scheme needs beta_vN >= 1");
  if (n_obj_ % N_ != 0) throw ConfigError("n_obj must be a multiple of N");
  if (n_obj_ % (beta_vN_ * N_) != 0) throw ConfigError("n_obj must be a multiple of beta_vN * N");
  w_ = n_obj_ / beta_vN_;
  m_ = n_obj_ / N_;

  symbol_of_.resize(N_);
  launched_.assign(N_, 1);
  launch_R_.assign(N_, -1);
  for (int s = 0; s < N_; ++s) {
    symbol_of_[s] = s;
    age_.push_back(s);
  }
  for (int v = 0; v < beta_vN_; ++v) L_.push_back(N_ + v);
  R_ = beta_vN_;
  Lrep_.resize(n_obj_);
  for (int p = 0; p < n_obj_; ++p) Lrep_[ring_.index(p)] = staircase(p) - beta_vN_ - 1;
}

int CompleteBase::staircase(int pos) const {
  const long num = static_cast<long>(beta_vN_) * (n_obj_ - pos);
  return static_cast<int>((num + n_obj_ - 1) / n_obj_);
}

const CompleteJob* CompleteBase::job_for_slot(int slot) const {
  for (const auto& j : jobs_)
    if (j.slot == slot) return &j;
  return nullptr;
}

CompleteFailure CompleteBase::apply_failure(int Y) {
  if (Y < 0 || Y >= N_) throw ParameterError("failure target out of range");
  const int g = backlog();
  CompleteFailure rec;
  if (Y < g) return rec;

  const int slot = age_[Y - g];
  age_.erase(age_.begin() + (Y - g));
  const int sigma = symbol_of_[slot];
  for (auto& j : jobs_)
    if (launch_R_[slot] >= j.R_F) --j.extra;

  const int tau = L_[g];
  L_.push_back(sigma);
  ++R_;
  symbol_of_[slot] = tau;
  launched_[slot] = 0;

  CompleteJob job;
  job.slot = slot;
  job.symbol = tau;
  job.E = g;
  job.R_F = R_;
  rec.noop = false;
  rec.slot = slot;
  rec.symbol = sigma;
  rec.E = g;
  rec.settled_erased = on_failure(slot, sigma, job, rec.virtual_erased);
  jobs_.push_back(job);
  return rec;
}

bool CompleteBase::synchronized_slot_is_ancillary(int k) const {
  const long s = w_ + m_;
  return (static_cast<long>(k + 1) * m_) / s > (static_cast<long>(k) * m_) / s;
}

CompleteStep CompleteBase::standard_step() {
  CompleteStep step;
  const int o = ring_.index(n_obj_ - 1);
  step.action = CompleteAction::standard;
  step.object = o;
  step.position = n_obj_ - 1;
  step.group = o % N_;
  step.regenerated = on_standard(o);
  ring_.rotate_head_to_tail();
  return step;
}

void CompleteBase::complete_head(CompleteStep& step) {
  const CompleteJob head = jobs_.front();
  if (L_.front() != head.symbol) throw IntegrityError("pending symbol order broken");
  L_.pop_front();
  launched_[head.slot] = 1;
  launch_R_[head.slot] = R_;
  ++launches_;
  age_.insert(age_.begin(), head.slot);
  jobs_.pop_front();
  for (auto& j : jobs_) ++j.extra;
  on_launch(head.slot, head.symbol);
  step.launched_slot = head.slot;
}

CompleteStep CompleteBase::repair_step() {
  if (jobs_.empty()) throw SequencingError("repair suspended: backlog empty");
  CompleteStep step;

  if (policy_ == CompletePolicy::ancillary_first) {
    for (auto& j : jobs_) {
      while (j.anc_next < m_) {
        const int o = j.slot + N_ * j.anc_next++;
        if (!ancillary_needed(o, j)) {
          ++step.dropped;
          continue;
        }
        step.action = CompleteAction::ancillary;
        step.object = o;
        step.position = ring_.position(o);
        step.group = j.slot;
        step.regenerated = on_ancillary(o, j);
        return step;
      }
    }
    const int dropped = step.dropped;
    step = standard_step();
    step.dropped = dropped;
    if (++jobs_.front().std_done == w_) complete_head(step);
    return step;
  }

  CompleteJob& j = jobs_.front();
  const int k = j.slots_used++;
  if (synchronized_slot_is_ancillary(k)) {
    const int o = j.slot + N_ * j.anc_next++;
    step.object = o;
    step.position = ring_.position(o);
    step.group = j.slot;
    if (ancillary_needed(o, j)) {
      step.action = CompleteAction::ancillary;
      step.regenerated = on_ancillary(o, j);
    } else {
      step.action = CompleteAction::idle;
      step.dropped = 1;
    }
  } else {
    step = standard_step();
    ++j.std_done;
  }
  if (j.slots_used == w_ + m_) complete_head(step);
  return step;
}

std::vector<CanonicalEntry> CompleteBase::canonical() const {
  std::vector<CanonicalEntry> out(n_obj_);
  for (int p = 0; p < n_obj_; ++p) {
    const int o = object_at(p);
    out[p] = {access_erased(o), virtual_held(o), prefix_form(o)};
  }
  return out;
}

bool CompleteBase::is_complete() const {
  if (!jobs_.empty()) return false;
  for (int p = 0; p < n_obj_; ++p) {
    const int o = object_at(p);
    if (access_erased(o) != 0 || virtual_held(o) != staircase(p) || !prefix_form(o)) return false;
  }
  return true;
}

SafetyReport CompleteBase::check_safety() const {
  SafetyReport r;
  r.worst_erased = worst_erased();
  r.actual_loss = r.worst_erased > N_ - k_c_;
  r.sufficient_violated = 2 * backlog() >= N_ - k_c_;
  return r;
}

std::optional<LossRecord> CompleteBase::detect_data_loss() const {
  const int limit = N_ - k_c_;
  if (worst_erased() <= limit) return std::nullopt;
  for (int p = 0; p < n_obj_; ++p) {
    const int e = erased_at(p);
    if (e > limit) return LossRecord{p, e};
  }
  throw IntegrityError("worst erased count not found in scan");
}

// ---------------------------------------------------------------------------

CompleteExplicit::CompleteExplicit(const SystemConfig& cfg)
    : CompleteBase(cfg), words_((cfg.N + cfg.beta_vN + 63) / 64) {
  held_.assign(static_cast<std::size_t>(n_obj_) * words_, 0);
  Rrep_.resize(n_obj_);
  for (int p = 0; p < n_obj_; ++p) {
    const int o = object_at(p);
    std::uint64_t* r = row(o);
    for (int s = 0; s < N_; ++s) r[s / 64] |= 1ULL << (s % 64);
    const int v = staircase(p);
    for (int i = 0; i < v; ++i) r[L_[i] / 64] |= 1ULL << (L_[i] % 64);
    Rrep_[o] = R_ - beta_vN_ + v;
  }
}

std::vector<std::uint64_t> CompleteExplicit::launched_mask() const {
  std::vector<std::uint64_t> m(words_, 0);
  for (int s : age_) m[symbol_of_[s] / 64] |= 1ULL << (symbol_of_[s] % 64);
  return m;
}

bool CompleteExplicit::holds(int object, int symbol) const {
  return (row(object)[symbol / 64] >> (symbol % 64)) & 1ULL;
}

int CompleteExplicit::held_count(int o) const {
  int c = 0;
  for (int w = 0; w < words_; ++w) c += std::popcount(row(o)[w]);
  return c;
}

int CompleteExplicit::access_erased(int o) const {
  const auto mask = launched_mask();
  int c = 0;
  for (int w = 0; w < words_; ++w) c += std::popcount(row(o)[w] & mask[w]);
  return N_ - c;
}

int CompleteExplicit::virtual_held(int o) const {
  const auto mask = launched_mask();
  int c = 0;
  for (int w = 0; w < words_; ++w) c += std::popcount(row(o)[w] & ~mask[w]);
  return c;
}

bool CompleteExplicit::prefix_form(int o) const {
  const int v = virtual_held(o);
  for (int i = 0; i < v; ++i)
    if (!holds(o, L_[i])) return false;
  return true;
}

int CompleteExplicit::E_max() const {
  const auto mask = launched_mask();
  const int g = backlog();
  int best = 0;
  for (int o = 0; o < n_obj_; ++o) {
    int c = 0;
    for (int w = 0; w < words_; ++w) c += std::popcount(row(o)[w] & mask[w]);
    best = std::max(best, N_ - c - g);
  }
  return best;
}

int CompleteExplicit::worst_erased() const {
  int best = -(N_ + beta_vN_);
  for (int o = 0; o < n_obj_; ++o) best = std::max(best, N_ - held_count(o));
  return best;
}

int CompleteExplicit::on_failure(int slot, int sigma, const CompleteJob&, int& virtual_erased) {
  const int w = sigma / 64;
  const std::uint64_t bit = 1ULL << (sigma % 64);
  int settled = 0;
  for (int o = 0; o < n_obj_; ++o) {
    std::uint64_t& x = row(o)[w];
    if (x & bit) {
      x &= ~bit;
      ++settled;
    }
  }
  const auto mask = launched_mask();
  virtual_erased = 0;
  for (int o = slot; o < n_obj_; o += N_) {
    std::uint64_t* r = row(o);
    for (int i = 0; i < words_; ++i) {
      virtual_erased += std::popcount(r[i] & ~mask[i]);
      r[i] &= mask[i];
    }
  }
  return settled;
}

bool CompleteExplicit::ancillary_needed(int o, const CompleteJob& job) const { return Rrep_[o] < job.R_F; }

int CompleteExplicit::on_ancillary(int o, const CompleteJob&) {
  auto target = launched_mask();
  const int v = prefix_of(o);
  for (int i = 0; i < v; ++i) target[L_[i] / 64] |= 1ULL << (L_[i] % 64);
  std::uint64_t* r = row(o);
  int regen = 0;
  for (int i = 0; i < words_; ++i) {
    if (r[i] & ~target[i]) throw IntegrityError("object holds a symbol outside its ancillary target");
    regen += std::popcount(target[i] & ~r[i]);
    r[i] = target[i];
  }
  return regen;
}

int CompleteExplicit::on_standard(int o) {
  auto target = launched_mask();
  for (int i = 0; i <= beta_vN_; ++i) target[L_[i] / 64] |= 1ULL << (L_[i] % 64);
  std::uint64_t* r = row(o);
  int regen = 0;
  for (int i = 0; i < words_; ++i) {
    regen += std::popcount(target[i] & ~r[i]);
    r[i] = target[i];
  }
  Rrep_[o] = R_;
  Lrep_[o] = launches_;
  return regen;
}

// ---------------------------------------------------------------------------

CompleteAggregate::CompleteAggregate(const SystemConfig& cfg) : CompleteBase(cfg) {
  Rrep_.resize(n_obj_);
  for (int p = 0; p < n_obj_; ++p) Rrep_[object_at(p)] = R_ - beta_vN_ + staircase(p);
}

const CompleteJob* CompleteAggregate::affecting(int o) const {
  const CompleteJob* j = job_for_slot(o % N_);
  if (j && Rrep_[o] < j->R_F && o / N_ >= j->anc_next) return j;
  return nullptr;
}

int CompleteAggregate::affected_in(const CompleteJob& j) const {
  int c = 0;
  for (int i = j.anc_next; i < m_; ++i)
    if (Rrep_[j.slot + N_ * i] < j.R_F) ++c;
  return c;
}

int CompleteAggregate::held_count(int o) const {
  const int g = backlog();
  if (const CompleteJob* j = affecting(o)) return N_ - g - j->extra;
  return N_ - g + prefix_of(o);
}

int CompleteAggregate::access_erased(int o) const {
  const CompleteJob* j = affecting(o);
  return backlog() + (j ? j->extra : 0);
}

int CompleteAggregate::virtual_held(int o) const { return affecting(o) ? 0 : prefix_of(o); }

int CompleteAggregate::E_max() const {
  int best = 0;
  for (const auto& j : jobs_)
    if (affected_in(j) > 0) best = std::max(best, j.extra);
  return best;
}

int CompleteAggregate::worst_erased() const {
  const int g = backlog();
  int best = -(N_ + beta_vN_);
  for (const auto& j : jobs_)
    if (affected_in(j) > 0) best = std::max(best, g + j.extra);
  // Repair counters fall from tail to head, so the first normal object met
  // from the head has the shortest prefix.
  for (int p = n_obj_ - 1; p >= 0; --p) {
    const int o = object_at(p);
    if (!affecting(o)) {
      best = std::max(best, g - prefix_of(o));
      break;
    }
  }
  return best;
}

int CompleteAggregate::on_failure(int slot, int, const CompleteJob&, int& virtual_erased) {
  int settled = n_obj_;
  for (const auto& j : jobs_)
    if (launch_R_[slot] >= j.R_F) settled -= affected_in(j);
  virtual_erased = 0;
  for (int o = slot; o < n_obj_; o += N_) virtual_erased += prefix_of(o);
  return settled;
}

bool CompleteAggregate::ancillary_needed(int o, const CompleteJob& job) const { return Rrep_[o] < job.R_F; }

int CompleteAggregate::on_ancillary(int o, const CompleteJob& job) { return job.extra + prefix_of(o); }

int CompleteAggregate::on_standard(int o) {
  const int regen = N_ - backlog() + beta_vN_ + 1 - held_count(o);
  Rrep_[o] = R_;
  Lrep_[o] = launches_;
  return regen;
}

}  // namespace liquid
