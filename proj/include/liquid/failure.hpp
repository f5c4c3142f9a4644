#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "liquid/rng.hpp"

namespace liquid {

struct FailureEvent {
  double time = 0.0;
  int target = 0;  // raw Y_i; the engine decides whether it hits a live node
  friend bool operator==(const FailureEvent&, const FailureEvent&) = default;
};

struct FailureScript {
  int N = 0;
  std::vector<FailureEvent> events;
  // Throws ParameterError if times are not strictly increasing or a
  // target is outside [0, N).
  void check() const;
};

FailureScript generate_script(RandomStream& stream, double rate_total, int N, double horizon);

void write_script(std::ostream& out, const FailureScript& script);
FailureScript read_script(std::istream& in, int N);
void save_script(const std::string& path, const FailureScript& script);
FailureScript load_script(const std::string& path, int N);

// Lazy source of failure events. Either draws from a stream forever or
// replays a recorded script.
class FailureSource {
 public:
  FailureSource(RandomStream stream, double rate_total, int N);
  explicit FailureSource(FailureScript script);

  const FailureEvent* peek();  // nullptr when a replayed script is exhausted
  void pop();
  long consumed() const { return consumed_; }

 private:
  void fill();
  bool scripted_ = false;
  RandomStream stream_;
  double rate_ = 0.0;
  int N_ = 0;
  double last_time_ = 0.0;
  FailureScript script_;
  std::size_t cursor_ = 0;
  bool have_ = false;
  FailureEvent next_{};
  long consumed_ = 0;
};

}  // namespace liquid
