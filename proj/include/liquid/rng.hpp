#pragma once

#include <cstdint>

namespace liquid {

// Counter-based generator: the value at (seed, stream_id, counter) is a pure
// function of those three words, so a stream can be copied, replayed or
// forked by stream_id without hidden state.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;

  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0)
      : seed(seed), stream_id(stream_id), counter(counter) {}

  // Value at an arbitrary counter without advancing.
  std::uint64_t at(std::uint64_t c) const;
  std::uint64_t next_u64() { return at(counter++); }
  // Uniform on the open interval (0, 1).
  double next_uniform();
  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);
  // Independent child stream.
  RandomStream fork(std::uint64_t label) const;

  friend bool operator==(const RandomStream&, const RandomStream&) = default;
};

std::uint64_t splitmix64(std::uint64_t x);

// Exponential(rate) duration; throws ParameterError on rate <= 0.
double sample_lifetime(RandomStream& stream, double rate);

}  // namespace liquid
