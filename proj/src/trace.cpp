#include "liquid/trace.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "liquid/errors.hpp"

namespace liquid {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::failure: return "failure";
    case EventKind::noop: return "noop";
    case EventKind::repair: return "repair";
    case EventKind::ancillary: return "ancillary";
    case EventKind::launch: return "launch";
    case EventKind::virtual_loss: return "virtual_loss";
    case EventKind::loss: return "loss";
    case EventKind::stop: return "stop";
  }
  return "?";
}

namespace {

EventKind kind_from(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(EventKind::stop); ++i)
    if (s == to_string(static_cast<EventKind>(i))) return static_cast<EventKind>(i);
  throw ParameterError("unknown event kind '" + s + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

// Columns: shared prefix, then scheme-specific extras. target is always
// present so a trace can be turned back into its failure script.
void write_trace_csv(std::ostream& out, Scheme scheme, int n_obj, const std::vector<TraceRow>& rows) {
  out << std::setprecision(17);
  switch (scheme) {
    case Scheme::basic:
      out << "t,event_kind,node_index,object_position,reads,regenerated,f1N,target,flags\n";
      for (const auto& r : rows)
        out << r.t << ',' << to_string(r.kind) << ',' << r.node << ',' << r.position << ',' << r.reads << ','
            << r.regenerated << ',' << r.f1N << ',' << r.target << ',' << r.flags << '\n';
      break;
    case Scheme::partial:
      out << "t,event_kind,node_index,object_position,reads,regenerated,f1N,g_vN,h_vN,x_v,I_s_flags,target\n";
      for (const auto& r : rows)
        out << r.t << ',' << to_string(r.kind) << ',' << r.node << ',' << r.position << ',' << r.reads << ','
            << r.regenerated << ',' << r.f1N << ',' << r.g_vN << ',' << r.h_vN << ','
            << static_cast<double>(r.x_v) / n_obj << ',' << r.flags << ',' << r.target << '\n';
      break;
    case Scheme::complete:
      out << "t,event_kind,node,group,backlog_len,E_max,complete_flag,object_position,regenerated,f1N,target,flags\n";
      for (const auto& r : rows)
        out << r.t << ',' << to_string(r.kind) << ',' << r.node << ',' << r.group << ',' << r.backlog << ','
            << r.E_max << ',' << (r.complete ? 1 : 0) << ',' << r.position << ',' << r.regenerated << ','
            << r.f1N << ',' << r.target << ',' << r.flags << '\n';
      break;
  }
}

void write_launch_csv(std::ostream& out, int n_obj, const std::vector<LaunchRecord>& rows) {
  out << std::setprecision(17) << "k,tau_L,z_s0,z_v0\n";
  for (const auto& r : rows)
    out << r.k << ',' << r.tau_L << ',' << static_cast<double>(r.c_s0) / n_obj << ','
        << static_cast<double>(r.c_v0) / n_obj << '\n';
}

std::vector<TraceRow> read_trace_csv(std::istream& in, Scheme scheme, int n_obj) {
  std::vector<TraceRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    TraceRow r;
    auto I = [&](std::size_t i) { return std::stoi(c.at(i)); };
    r.t = std::stod(c.at(0));
    r.kind = kind_from(c.at(1));
    switch (scheme) {
      case Scheme::basic:
        r.node = I(2), r.position = I(3), r.reads = I(4), r.regenerated = I(5), r.f1N = I(6), r.target = I(7);
        r.flags = I(8);
        break;
      case Scheme::partial:
        r.node = I(2), r.position = I(3), r.reads = I(4), r.regenerated = I(5), r.f1N = I(6), r.g_vN = I(7);
        r.h_vN = I(8);
        r.x_v = static_cast<int>(std::lround(std::stod(c.at(9)) * n_obj));
        r.flags = I(10), r.target = I(11);
        break;
      case Scheme::complete:
        r.node = I(2), r.group = I(3), r.backlog = I(4), r.E_max = I(5), r.complete = I(6) != 0;
        r.position = I(7), r.regenerated = I(8), r.f1N = I(9), r.target = I(10), r.flags = I(11);
        break;
    }
    rows.push_back(r);
  }
  return rows;
}

std::string describe(const TraceRow& r) {
  std::ostringstream o;
  o << std::setprecision(17) << "t=" << r.t << " kind=" << to_string(r.kind) << " target=" << r.target
    << " node=" << r.node << " pos=" << r.position << " reads=" << r.reads << " regen=" << r.regenerated
    << " f1N=" << r.f1N << " g=" << r.g_vN << " h=" << r.h_vN << " x_v=" << r.x_v << " group=" << r.group
    << " backlog=" << r.backlog << " E_max=" << r.E_max << " complete=" << r.complete << " flags=" << r.flags;
  return o.str();
}

}  // namespace liquid
