#include "liquid/engine_partial.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "liquid/errors.hpp"

namespace liquid {

bool partial_no_drop(int beta_vN, int block, int n_obj) {
  // A new node's settled count is (h + 1) block with h <= beta_vN carriers,
  // and its transients start at n_obj - beta_vN block.
  return static_cast<long>(2 * beta_vN + 1) * block <= n_obj;
}

PartialCore::PartialCore(const SystemConfig& cfg)
    : N(cfg.N), n_obj(cfg.n_obj), k_c(cfg.k_c), beta_vN(cfg.beta_vN) {
  if (cfg.scheme != Scheme::partial) throw ConfigError("partial engine needs scheme = partial");
  const auto sched = derive_schedule(cfg);
  block = sched.block;
  dt = sched.dt;
  lambda_dt = cfg.lambda * dt;
  delta_N = static_cast<int>(std::lround(cfg.delta * cfg.N));
  const int launched_count = N - delta_N;
  if (delta_N < 0 || launched_count < 1) throw ConfigError("partial engine: need 0 <= delta N < N");
  if (!(launched_count - 1 < -1.0 / std::expm1(-lambda_dt)))
    throw ConfigError("partial engine: initial survivor series cannot fill every launched slot");

  std::vector<int> depth(launched_count);
  for (int j = 0; j < launched_count; ++j) depth[j] = initial_launch_depth(lambda_dt, j);
  base_ = -static_cast<long>(depth.back());
  next_k_ = 1;
  table_.assign(static_cast<std::size_t>(next_k_ - base_), NodeInfo{});
  for (long i = base_; i < next_k_; ++i) {
    NodeInfo& n = mut(i);
    n.I_L = i;
    n.tau_L = static_cast<double>(i) * dt;
    n.c_s0 = n.c_v0 = initial_frontier(-i);
    n.tau_F = n.tau_L;  // indices with no surviving node failed before t=0
  }
  for (int pos = delta_N - 1; pos >= 0; --pos) empties_.push_back(pos);
  for (int j = 0; j < launched_count; ++j) {
    NodeInfo& n = mut(-depth[j]);
    n.exists = true;
    n.alive = true;
    n.slot = delta_N + j;
    n.tau_F = std::numeric_limits<double>::infinity();
    launched_.push_back(n.I_L);
  }
}

const NodeInfo& PartialCore::node(long I_L) const {
  if (!known(I_L)) throw ParameterError("node index " + std::to_string(I_L) + " has not been launched");
  return table_[I_L - base_];
}

int PartialCore::initial_frontier(long d) const {
  const long rows = std::max(0L, static_cast<long>(beta_vN) - d);
  return static_cast<int>(std::clamp(n_obj - rows * block, 0L, static_cast<long>(n_obj)));
}

int PartialCore::survivor_count(long I_L) const {
  if (!known(I_L) || !node(I_L).exists) throw ParameterError("survivor_count: node was never launched");
  int n = 0;
  for (long id : launched_) n += (id >= I_L);
  return n;
}

std::optional<long> PartialCore::resolve_target(int Y) const {
  if (Y < 0 || Y >= N) throw ParameterError("failure target out of range");
  if (Y < g()) return std::nullopt;
  return launched_[Y - g()];
}

void PartialCore::kill(long I_L, double t) {
  auto it = std::find(launched_.begin(), launched_.end(), I_L);
  if (it == launched_.end()) throw SequencingError("kill: node is not live");
  launched_.erase(it);
  NodeInfo& n = mut(I_L);
  n.alive = false;
  n.tau_F = t;
  empties_.push_back(n.slot);  // replacement enters at node position 0
}

long PartialCore::launch(double t, int c_s0, int c_v0) {
  if (empties_.empty()) throw SequencingError("launch without a transitional node");
  NodeInfo n;
  n.I_L = next_k_++;
  n.slot = empties_.front();
  empties_.pop_front();
  n.exists = n.alive = true;
  n.tau_L = t;
  n.c_s0 = c_s0;
  n.c_v0 = c_v0;
  table_.push_back(n);
  launched_.insert(launched_.begin(), n.I_L);
  progress_ = 0;
  return n.I_L;
}

StopFlags monitor_stopping(const PartialCore& core, long k, int K_m, double Z_m, double beta_bar) {
  StopFlags f;
  f.A_g = core.g() >= 1 && core.g() <= 2 * core.delta_N - 1;
  const long j = k - K_m;
  int c_s0;
  if (j >= 1) c_s0 = core.node(j).c_s0;
  else c_s0 = core.initial_frontier(-j);
  f.A_Z = c_s0 >= Z_m * core.n_obj - 1e-9;
  int survivors = 0;
  for (long id : core.launched()) survivors += (id >= j);
  f.A_S = survivors <= beta_bar * core.N + 1e-9;
  return f;
}

// ---------------------------------------------------------------- aggregate

PartialAggregate::PartialAggregate(const SystemConfig& cfg) : core_(cfg) {
  if (!partial_no_drop(core_.beta_vN, core_.block, core_.n_obj))
    throw ConfigError("aggregate partial engine needs (2 beta_vN + 1) block <= n_obj");
  c_s_.resize(core_.table_size());
  rows_.assign(core_.table_size(), 0);
  for (long id = core_.first_index(); id < core_.next_index(); ++id) {
    const long i = core_.table_index(id);
    c_s_[i] = core_.node(id).c_s0;
    if (core_.node(id).exists) rows_[i] = std::max(0L, static_cast<long>(core_.beta_vN) + id);
  }
}

int PartialAggregate::h() const {
  int h = 0;
  for (long id : core_.launched()) h += rows_[core_.table_index(id)] > 0;
  return h;
}

int PartialAggregate::rows_at(int pos) const {
  // Carrier blocks sit above the progress block, youngest carrier lowest.
  int k = (pos - core_.progress()) / core_.block;
  for (long id : core_.launched()) {
    const int r = rows_[core_.table_index(id)];
    if (r == 0) continue;
    if (k-- == 0) return r;
  }
  return 0;
}

int PartialAggregate::erased_at(int pos) const {
  int intact = 0;
  for (long id : core_.launched()) intact += c_s_[core_.table_index(id)] > pos;
  if (pos < core_.progress()) intact += 1 + core_.beta_vN;
  else intact += rows_at(pos);
  return core_.N - intact;
}

std::optional<LossRecord> PartialAggregate::detect_data_loss() const {
  // Erased counts are nondecreasing along the queue.
  const int r = core_.N - core_.k_c;
  int lo = 0, hi = core_.n_obj;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (erased_at(mid) > r) hi = mid;
    else lo = mid + 1;
  }
  if (lo == core_.n_obj) return std::nullopt;
  return LossRecord{lo, erased_at(lo)};
}

std::vector<NodeView> PartialAggregate::live_nodes() const {
  std::vector<NodeView> out;
  for (long id : core_.launched()) {
    const long i = core_.table_index(id);
    out.push_back({id, core_.node(id).slot, c_s_[i], core_.n_obj - rows_[i] * core_.block, rows_[i]});
  }
  return out;
}

PartialFailure PartialAggregate::apply_failure_event(double t, int Y) {
  PartialFailure rec;
  const auto target = core_.resolve_target(Y);
  if (!target) return rec;
  const long id = *target;
  const long i = core_.table_index(id);
  rec.noop = false;
  rec.I_L = id;
  rec.slot = core_.node(id).slot;
  rec.newly_erased = c_s_[i];
  if (rows_[i] > 0) {
    rec.carrier = true;
    rec.forwarded = core_.block;
    rec.lost_transients = rows_[i] * core_.block;
    rec.forwarded_to = x_v() - core_.block;
  }
  rows_[i] = 0;
  core_.kill(id, t);
  return rec;
}

RepairRecord PartialAggregate::standard_repair_step(bool allow_loss) {
  if (core_.g() == 0) throw SequencingError("standard repair is suspended while g_vN = 0");
  RepairRecord rec;
  rec.position = core_.n_obj - 1;
  rec.unrecoverable = head_erased() > core_.N - core_.k_c;
  if (rec.unrecoverable && !allow_loss) throw DataLossError("head below k_c intact fragments", rec.position);
  int missing = 0;
  for (long id : core_.launched()) {
    int& c = c_s_[core_.table_index(id)];
    missing += c < core_.n_obj;
    c = std::min(c + 1, core_.n_obj);
  }
  rec.reads = core_.k_c;
  rec.regenerated = missing + 1 + core_.beta_vN;
  core_.advance_progress();
  return rec;
}

PartialLaunch PartialAggregate::complete_transitional(double t) {
  if (!launch_ready()) throw SequencingError("transitional node has not finished its block");
  PartialLaunch out;
  const int h_before = h();
  const int c_s0 = (h_before + 1) * core_.block;
  const int c_v0 = core_.n_obj - core_.beta_vN * core_.block;
  if (c_s0 > c_v0) throw SequencingError("settled frontier would pass the transient start");
  for (long id : core_.launched()) {
    int& r = rows_[core_.table_index(id)];
    if (r > 0) --r;
  }
  out.slot = core_.transitional_slot();
  out.copied = h_before * core_.block;
  const long id = core_.launch(t, c_s0, c_v0);
  c_s_.push_back(c_s0);
  rows_.push_back(core_.beta_vN);
  out.record = {id, t, c_s0, c_v0};
  return out;
}

RepairRecord PartialAggregate::ancillary_repair_step(bool allow_loss) {
  if (core_.g() != 0) throw SequencingError("ancillary repair runs only while g_vN = 0");
  RepairRecord rec;
  rec.position = core_.n_obj - 1;
  rec.unrecoverable = head_erased() > core_.N - core_.k_c;
  if (rec.unrecoverable && !allow_loss) throw DataLossError("head below k_c intact fragments", rec.position);
  rec.dest = x_v();
  for (long id : core_.launched()) {
    const long i = core_.table_index(id);
    int& c = c_s_[i];
    if (c >= core_.n_obj) continue;
    ++rec.regenerated;
    // A full node keeps its frontier: its rightmost settled fragment is
    // overwritten by the new one.
    if (c + 1 > core_.n_obj - rows_[i] * core_.block) ++rec.overwrites;
    else ++c;
  }
  rec.reads = core_.k_c;
  return rec;
}

// ----------------------------------------------------------------- explicit

PartialExplicit::PartialExplicit(const SystemConfig& cfg) : core_(cfg) {
  const int n = core_.n_obj, b = core_.block;
  if (2L * core_.beta_vN * b >= n) throw ConfigError("explicit partial engine needs 2 beta_vN block < n_obj");
  words_ = (core_.N + 63) / 64;
  order_.resize(n);
  for (int p = 0; p < n; ++p) order_[p] = p;
  settled_.assign(static_cast<std::size_t>(n) * words_, 0);
  virt_.assign(n, 0);
  carrier_.assign(n, kNone);
  held_.assign(core_.N, 0);
  blocks_.resize(core_.table_size());
  int k = 0;
  for (long id : core_.launched()) {
    const NodeInfo& nd = core_.node(id);
    for (int p = 0; p < nd.c_s0; ++p) set(order_[p], nd.slot);
    const int rows = std::max(0L, static_cast<long>(core_.beta_vN) + id);
    if (rows == 0) continue;
    for (int p = k * b; p < (k + 1) * b; ++p) {
      const int o = order_[p];
      virt_[o] = rows;
      carrier_[o] = id;
      blocks_[core_.table_index(id)].push_back(o);
    }
    ++k;
  }
}

void PartialExplicit::set(int obj, int slot) {
  std::uint64_t& w = bits(obj)[slot / 64];
  const std::uint64_t m = std::uint64_t{1} << (slot % 64);
  if (!(w & m)) {
    w |= m;
    ++held_[slot];
  }
}

void PartialExplicit::clear(int obj, int slot) {
  std::uint64_t& w = bits(obj)[slot / 64];
  const std::uint64_t m = std::uint64_t{1} << (slot % 64);
  if (w & m) {
    w &= ~m;
    --held_[slot];
  }
}

int PartialExplicit::intact(int obj) const {
  int n = virt_[obj];
  const std::uint64_t* b = bits(obj);
  for (int w = 0; w < words_; ++w) n += std::popcount(b[w]);
  return n;
}

bool PartialExplicit::holds(int pos, int slot) const { return has(order_[pos], slot); }
int PartialExplicit::virtual_count(int pos) const { return virt_[order_[pos]]; }

void PartialExplicit::stable_move(int from, int to) {
  const int o = order_[from];
  if (from < to) std::move(order_.begin() + from + 1, order_.begin() + to + 1, order_.begin() + from);
  else std::move_backward(order_.begin() + to, order_.begin() + from, order_.begin() + from + 1);
  order_[to] = o;
}

int PartialExplicit::erased_at(int pos) const { return core_.N - intact(order_[pos]); }

std::optional<LossRecord> PartialExplicit::detect_data_loss() const {
  const int r = core_.N - core_.k_c;
  for (int p = 0; p < core_.n_obj; ++p) {
    const int e = erased_at(p);
    if (e > r) return LossRecord{p, e};
  }
  return std::nullopt;
}

int PartialExplicit::h() const {
  int h = 0;
  for (long id : core_.launched()) h += !blocks_[core_.table_index(id)].empty();
  return h;
}

int PartialExplicit::x_v() const {
  int n = 0;
  for (int v : virt_) n += v > 0;
  return n;
}

std::vector<NodeView> PartialExplicit::live_nodes() const {
  std::vector<NodeView> out;
  for (long id : core_.launched()) {
    const auto& blk = blocks_[core_.table_index(id)];
    const int slot = core_.node(id).slot;
    const int rows = blk.empty() ? 0 : virt_[blk.front()];
    out.push_back({id, slot, held_[slot], core_.n_obj - static_cast<int>(blk.size()) * rows, rows});
  }
  return out;
}

PartialFailure PartialExplicit::apply_failure_event(double t, int Y) {
  PartialFailure rec;
  const auto target = core_.resolve_target(Y);
  if (!target) return rec;
  const long id = *target;
  rec.noop = false;
  rec.I_L = id;
  rec.slot = core_.node(id).slot;
  rec.newly_erased = held_[rec.slot];
  for (int o = 0; o < core_.n_obj; ++o) clear(o, rec.slot);

  auto& blk = blocks_[core_.table_index(id)];
  if (!blk.empty()) {
    rec.carrier = true;
    const int xv = x_v();
    std::vector<char> lost(core_.n_obj, 0);
    for (int o : blk) {
      lost[o] = 1;
      rec.lost_transients += virt_[o];
      virt_[o] = 0;
      carrier_[o] = kNone;
    }
    rec.forwarded = static_cast<int>(blk.size());
    // Objects that lost their transients move up to sit just below x_v(t-).
    std::stable_partition(order_.begin(), order_.begin() + xv, [&](int o) { return !lost[o]; });
    rec.forwarded_to = xv - rec.forwarded;
    blk.clear();
  }
  core_.kill(id, t);
  return rec;
}

RepairRecord PartialExplicit::standard_repair_step(bool allow_loss) {
  if (core_.g() == 0) throw SequencingError("standard repair is suspended while g_vN = 0");
  const int n = core_.n_obj;
  const int o = order_[n - 1];
  if (virt_[o] > 0) throw SequencingError("head object still holds virtual fragments");
  RepairRecord rec;
  rec.position = n - 1;
  rec.unrecoverable = core_.N - intact(o) > core_.N - core_.k_c;
  if (rec.unrecoverable && !allow_loss) throw DataLossError("head below k_c intact fragments", rec.position);
  int missing = 0;
  for (long id : core_.launched()) {
    const int s = core_.node(id).slot;
    if (!has(o, s)) {
      ++missing;
      set(o, s);
    }
  }
  set(o, core_.transitional_slot());
  virt_[o] = core_.beta_vN;
  carrier_[o] = core_.beta_vN > 0 ? kTrans : kNone;
  trans_block_.push_back(o);
  std::rotate(order_.rbegin(), order_.rbegin() + 1, order_.rend());
  rec.reads = core_.k_c;
  rec.regenerated = missing + 1 + core_.beta_vN;
  core_.advance_progress();
  return rec;
}

PartialLaunch PartialExplicit::complete_transitional(double t) {
  if (!launch_ready()) throw SequencingError("transitional node has not finished its block");
  PartialLaunch out;
  const int T = core_.transitional_slot();
  const int c_v0 = core_.n_obj - core_.beta_vN * core_.block;
  int budget = c_v0 - static_cast<int>(trans_block_.size());
  std::vector<int> pos_of(core_.n_obj);
  for (int p = 0; p < core_.n_obj; ++p) pos_of[order_[p]] = p;
  for (long id : core_.launched()) {
    auto& blk = blocks_[core_.table_index(id)];
    if (blk.empty()) continue;
    std::vector<int> by_pos = blk;
    std::sort(by_pos.begin(), by_pos.end(), [&](int a, int b) { return pos_of[a] < pos_of[b]; });
    for (int o : by_pos) {
      // Youngest carriers sit lowest, so the budget runs out on the
      // rightmost objects first.
      if (budget > 0) {
        set(o, T);
        --budget;
        ++out.copied;
      } else {
        ++out.dropped;
      }
      if (--virt_[o] == 0) carrier_[o] = kNone;
    }
    if (virt_[blk.front()] == 0) blk.clear();
  }
  const int c_s0 = static_cast<int>(trans_block_.size()) + out.copied;
  out.slot = T;
  const long id = core_.launch(t, c_s0, c_v0);
  blocks_.emplace_back();
  if (core_.beta_vN > 0) {
    for (int o : trans_block_) carrier_[o] = id;
    blocks_.back() = trans_block_;
  }
  trans_block_.clear();
  out.record = {id, t, c_s0, c_v0};
  return out;
}

RepairRecord PartialExplicit::ancillary_repair_step(bool allow_loss) {
  if (core_.g() != 0) throw SequencingError("ancillary repair runs only while g_vN = 0");
  const int n = core_.n_obj;
  const int o = order_[n - 1];
  if (virt_[o] > 0) throw SequencingError("head object still holds virtual fragments");
  RepairRecord rec;
  rec.position = n - 1;
  rec.unrecoverable = core_.N - intact(o) > core_.N - core_.k_c;
  if (rec.unrecoverable && !allow_loss) throw DataLossError("head below k_c intact fragments", rec.position);
  rec.dest = x_v();
  stable_move(n - 1, rec.dest);
  std::vector<int> full;
  for (long id : core_.launched()) {
    const int s = core_.node(id).slot;
    if (has(o, s)) continue;
    const auto& blk = blocks_[core_.table_index(id)];
    const int transient = blk.empty() ? 0 : static_cast<int>(blk.size()) * virt_[blk.front()];
    if (held_[s] + transient >= n) full.push_back(s);
    set(o, s);
    ++rec.regenerated;
  }
  for (int s : full) {
    for (int p = n - 1; p >= 0; --p) {
      if (has(order_[p], s)) {
        clear(order_[p], s);
        break;
      }
    }
    ++rec.overwrites;
  }
  rec.reads = core_.k_c;
  return rec;
}

bool PartialExplicit::nested() const {
  // Intact set = settled slots plus future launch symbols. Transitional-block
  // objects hold the next launch as a settled fragment, so their virtual
  // symbols start one launch later.
  for (int p = 0; p + 1 < core_.n_obj; ++p) {
    const int a = order_[p], b = order_[p + 1];
    const std::uint64_t* A = bits(a);
    const std::uint64_t* B = bits(b);
    for (int w = 0; w < words_; ++w)
      if (B[w] & ~A[w]) return false;
    const int a0 = carrier_[a] == kTrans ? 1 : 0, b0 = carrier_[b] == kTrans ? 1 : 0;
    const int a1 = a0 + virt_[a], b1 = b0 + virt_[b];
    if (virt_[b] == 0) continue;
    // Offset 0 is the transitional symbol; a holds it settled if a0 == 1.
    const int a_lo = (a0 == 1 && core_.has_transitional() && has(a, core_.transitional_slot())) ? 0 : a0;
    if (b0 < a_lo || b1 > a1) return false;
  }
  return true;
}

bool PartialExplicit::virtual_prefix() const {
  const int xv = x_v();
  for (int p = 0; p < core_.n_obj; ++p)
    if ((virt_[order_[p]] > 0) != (p < xv)) return false;
  return true;
}

bool PartialExplicit::settled_contiguous(int slot) const {
  const int c = held_[slot];
  for (int p = 0; p < core_.n_obj; ++p)
    if (has(order_[p], slot) != (p < c)) return false;
  return true;
}

}  // namespace liquid
