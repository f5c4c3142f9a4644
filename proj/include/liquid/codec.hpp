#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace liquid {

namespace gf256 {
// Arithmetic in GF(2^8) modulo x^8 + x^4 + x^3 + x^2 + 1 (0x11d).
std::uint8_t mul(std::uint8_t a, std::uint8_t b);
std::uint8_t inv(std::uint8_t a);  // a != 0
std::uint8_t pow(std::uint8_t a, unsigned e);
}  // namespace gf256

using ByteMatrix = std::vector<std::vector<std::uint8_t>>;

// Gauss-Jordan inverse over GF(256); returns false when singular.
bool invert(ByteMatrix m, ByteMatrix& out);

struct Fragment {
  int symbol_index = 0;
  std::vector<std::uint8_t> payload;
};

// Systematic MDS code: generator rows 0..k-1 form the identity.
class CodeSpec {
 public:
  CodeSpec(int k, int n);
  int k() const { return k_; }
  int n() const { return n_; }
  const ByteMatrix& generator() const { return gen_; }
  // Invert every k x k row submatrix of the generator.
  bool verify_mds() const;

 private:
  int k_, n_;
  ByteMatrix gen_;  // n rows, k columns
};

std::vector<Fragment> encode(std::span<const std::uint8_t> data, const CodeSpec& spec);
std::vector<std::uint8_t> decode(std::span<const Fragment> fragments, const CodeSpec& spec);
Fragment regenerate(int target, std::span<const Fragment> fragments, const CodeSpec& spec);

}  // namespace liquid
