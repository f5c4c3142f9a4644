#include "liquid/failure.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "liquid/errors.hpp"

namespace liquid {

void FailureScript::check() const {
  double prev = -1.0;
  for (const auto& e : events) {
    if (!(e.time > prev) || e.time < 0.0) throw ParameterError("script times must be strictly increasing");
    if (e.target < 0 || e.target >= N) throw ParameterError("script target out of range");
    prev = e.time;
  }
}

FailureScript generate_script(RandomStream& stream, double rate_total, int N, double horizon) {
  if (!(horizon > 0.0)) throw ParameterError("generate_script: horizon must be positive");
  if (N <= 0) throw ParameterError("generate_script: N must be positive");
  FailureSource src(stream, rate_total, N);
  FailureScript script;
  script.N = N;
  while (const FailureEvent* e = src.peek()) {
    if (e->time > horizon) break;
    script.events.push_back(*e);
    src.pop();
  }
  // Leave the caller's stream where a lazy source would have left it after
  // drawing the first event past the horizon.
  stream.counter += 2 * (src.consumed() + 1);
  return script;
}

void write_script(std::ostream& out, const FailureScript& script) {
  out << std::setprecision(17);
  for (const auto& e : script.events) out << e.time << '\t' << e.target << '\n';
}

FailureScript read_script(std::istream& in, int N) {
  FailureScript script;
  script.N = N;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    FailureEvent e;
    if (!(ls >> e.time >> e.target)) throw ParameterError("malformed script line " + std::to_string(lineno));
    script.events.push_back(e);
  }
  script.check();
  return script;
}

void save_script(const std::string& path, const FailureScript& script) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path);
  write_script(out, script);
}

FailureScript load_script(const std::string& path, int N) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read " + path);
  return read_script(in, N);
}

FailureSource::FailureSource(RandomStream stream, double rate_total, int N)
    : stream_(stream), rate_(rate_total), N_(N) {
  if (!(rate_total > 0.0)) throw ParameterError("failure rate must be positive");
  if (N <= 0) throw ParameterError("N must be positive");
}

FailureSource::FailureSource(FailureScript script) : scripted_(true), script_(std::move(script)) {
  script_.check();
}

void FailureSource::fill() {
  if (have_) return;
  if (scripted_) {
    if (cursor_ < script_.events.size()) {
      next_ = script_.events[cursor_];
      have_ = true;
    }
    return;
  }
  // Each event consumes exactly two counter values: gap, then target.
  last_time_ += sample_lifetime(stream_, rate_);
  next_.time = last_time_;
  next_.target = static_cast<int>(stream_.next_u64() % static_cast<std::uint64_t>(N_));
  have_ = true;
}

const FailureEvent* FailureSource::peek() {
  fill();
  return have_ ? &next_ : nullptr;
}

void FailureSource::pop() {
  fill();
  if (!have_) return;
  have_ = false;
  ++consumed_;
  if (scripted_) ++cursor_;
}

}  // namespace liquid
