#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "liquid/config.hpp"

namespace liquid {

enum class EventKind { failure, noop, repair, ancillary, launch, virtual_loss, loss, stop };
const char* to_string(EventKind k);

// Row flags.
inline constexpr int kUnrecoverable = 1;  // repair of an object below k_c intact
inline constexpr int kFlagAg = 2;          // stopping monitor bits, launch rows
inline constexpr int kFlagAZ = 4;
inline constexpr int kFlagAS = 8;
inline constexpr int kFlagStopped = 16;
inline constexpr int kFlagDrop = 32;       // settled fragments dropped at launch
inline constexpr int kFlagOverwrite = 64;  // ancillary overwrite on a full node
inline constexpr int kFlagSufficient = 128;  // complete: g_vN >= delta N / 2

// One row of an event trace. Only the columns relevant to a scheme are
// written out, but every field takes part in equivalence comparisons.
struct TraceRow {
  double t = 0.0;
  EventKind kind = EventKind::failure;
  int target = -1;    // raw failure target Y for failure and noop rows
  int node = -1;      // physical slot
  int position = -1;  // object position, 0 = tail
  int reads = 0;
  int regenerated = 0;
  int f1N = 0;        // erased count at the head after the event
  int g_vN = 0;
  int h_vN = 0;
  int x_v = 0;        // objects holding virtual fragments
  int group = -1;
  int backlog = 0;
  int E_max = 0;
  bool complete = false;
  int flags = 0;
  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct LaunchRecord {
  long k = 0;
  double tau_L = 0.0;
  int c_s0 = 0;  // settled frontier at launch, in objects
  int c_v0 = 0;  // transient start at launch, in objects
  friend bool operator==(const LaunchRecord&, const LaunchRecord&) = default;
};

void write_trace_csv(std::ostream& out, Scheme scheme, int n_obj, const std::vector<TraceRow>& rows);
void write_launch_csv(std::ostream& out, int n_obj, const std::vector<LaunchRecord>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in, Scheme scheme, int n_obj);
std::string describe(const TraceRow& r);

}  // namespace liquid
