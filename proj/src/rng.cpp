#include "liquid/rng.hpp"

#include <cmath>

#include "liquid/errors.hpp"

namespace liquid {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t RandomStream::at(std::uint64_t c) const {
  // Key the stream by (seed, stream_id), then walk a Weyl sequence in the
  // counter; the finalizer decorrelates neighbouring counters.
  const std::uint64_t key = splitmix64(seed ^ splitmix64(stream_id ^ 0x5851F42D4C957F2Dull));
  return splitmix64(key + c * 0xD1B54A32D192ED03ull);
}

double RandomStream::next_uniform() {
  // 52 random mantissa bits, offset by half an ulp so 0 and 1 are excluded.
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t RandomStream::next_below(std::uint64_t n) {
  if (n == 0) throw ParameterError("next_below: n must be positive");
  // Lemire's multiply-shift with rejection keeps the result unbiased.
  for (;;) {
    const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
  }
}

RandomStream RandomStream::fork(std::uint64_t label) const {
  return RandomStream(seed, splitmix64(stream_id) ^ splitmix64(label + 1), 0);
}

double sample_lifetime(RandomStream& stream, double rate) {
  if (!(rate > 0.0)) throw ParameterError("sample_lifetime: rate must be positive");
  return -std::log(stream.next_uniform()) / rate;
}

}  // namespace liquid
