#include "liquid/codec.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "liquid/errors.hpp"

namespace liquid {

namespace gf256 {
namespace {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<int, 256> log{};
  Tables() {
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= 0x11d;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  if (a == 0 || b == 0) return 0;
  const auto& t = tables();
  return t.exp[t.log[a] + t.log[b]];
}

std::uint8_t inv(std::uint8_t a) {
  if (a == 0) throw ParameterError("gf256: inverse of zero");
  const auto& t = tables();
  return t.exp[255 - t.log[a]];
}

std::uint8_t pow(std::uint8_t a, unsigned e) {
  std::uint8_t r = 1;
  for (unsigned i = 0; i < e; ++i) r = mul(r, a);
  return r;
}

}  // namespace gf256

bool invert(ByteMatrix m, ByteMatrix& out) {
  const std::size_t n = m.size();
  out.assign(n, std::vector<std::uint8_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) out[i][i] = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && m[piv][col] == 0) ++piv;
    if (piv == n) return false;
    std::swap(m[piv], m[col]);
    std::swap(out[piv], out[col]);
    const std::uint8_t s = gf256::inv(m[col][col]);
    for (std::size_t j = 0; j < n; ++j) {
      m[col][j] = gf256::mul(m[col][j], s);
      out[col][j] = gf256::mul(out[col][j], s);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || m[r][col] == 0) continue;
      const std::uint8_t f = m[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        m[r][j] ^= gf256::mul(f, m[col][j]);
        out[r][j] ^= gf256::mul(f, out[col][j]);
      }
    }
  }
  return true;
}

namespace {

ByteMatrix multiply(const ByteMatrix& a, const ByteMatrix& b) {
  const std::size_t rows = a.size(), inner = b.size(), cols = b.empty() ? 0 : b[0].size();
  ByteMatrix c(rows, std::vector<std::uint8_t>(cols, 0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t l = 0; l < inner; ++l) {
      if (a[i][l] == 0) continue;
      for (std::size_t j = 0; j < cols; ++j) c[i][j] ^= gf256::mul(a[i][l], b[l][j]);
    }
  return c;
}

// Checks shape and distinctness, returns fragment length.
std::size_t check_fragments(std::span<const Fragment> frags, const CodeSpec& spec) {
  std::vector<bool> seen(spec.n(), false);
  int distinct = 0;
  std::size_t len = frags.empty() ? 0 : frags[0].payload.size();
  for (const auto& f : frags) {
    if (f.symbol_index < 0 || f.symbol_index >= spec.n()) throw ParameterError("fragment index out of range");
    if (f.payload.size() != len) throw ParameterError("fragment lengths differ");
    if (!seen[f.symbol_index]) {
      seen[f.symbol_index] = true;
      ++distinct;
    }
  }
  if (distinct < spec.k()) throw UnrecoverableError("fewer than k distinct fragments");
  return len;
}

// Source fragments recovered from any k distinct inputs.
std::vector<std::vector<std::uint8_t>> recover_sources(std::span<const Fragment> frags, const CodeSpec& spec) {
  const int k = spec.k();
  const std::size_t len = check_fragments(frags, spec);
  std::vector<const Fragment*> pick;
  std::vector<bool> seen(spec.n(), false);
  for (const auto& f : frags) {
    if (seen[f.symbol_index]) continue;
    seen[f.symbol_index] = true;
    pick.push_back(&f);
    if (static_cast<int>(pick.size()) == k) break;
  }
  std::sort(pick.begin(), pick.end(), [](auto* a, auto* b) { return a->symbol_index < b->symbol_index; });

  std::vector<std::vector<std::uint8_t>> src(k);
  if (pick.back()->symbol_index == k - 1) {
    // Exactly the systematic rows: no arithmetic needed.
    for (int i = 0; i < k; ++i) src[i] = pick[i]->payload;
    return src;
  }
  ByteMatrix sub(k);
  for (int i = 0; i < k; ++i) sub[i] = spec.generator()[pick[i]->symbol_index];
  ByteMatrix inv;
  if (!invert(sub, inv)) throw UnrecoverableError("singular generator submatrix");
  for (int i = 0; i < k; ++i) {
    src[i].assign(len, 0);
    for (int j = 0; j < k; ++j) {
      const std::uint8_t c = inv[i][j];
      if (c == 0) continue;
      const auto& p = pick[j]->payload;
      for (std::size_t b = 0; b < len; ++b) src[i][b] ^= gf256::mul(c, p[b]);
    }
  }
  return src;
}

std::vector<std::uint8_t> combine(const std::vector<std::uint8_t>& row,
                                  const std::vector<std::vector<std::uint8_t>>& src, std::size_t len) {
  std::vector<std::uint8_t> out(len, 0);
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] == 0) continue;
    for (std::size_t b = 0; b < len; ++b) out[b] ^= gf256::mul(row[j], src[j][b]);
  }
  return out;
}

}  // namespace

CodeSpec::CodeSpec(int k, int n) : k_(k), n_(n) {
  if (k < 1 || n < k) throw ParameterError("CodeSpec: need 1 <= k <= n");
  if (n > 255) throw ParameterError("CodeSpec: n must be at most 255");
  // Vandermonde rows at the distinct points 0..n-1, right-multiplied by the
  // inverse of the top k x k block. Any k rows of the result are the
  // corresponding Vandermonde rows times an invertible matrix, hence MDS.
  ByteMatrix v(n, std::vector<std::uint8_t>(k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) v[i][j] = (j == 0) ? 1 : gf256::pow(static_cast<std::uint8_t>(i), j);
  ByteMatrix top(v.begin(), v.begin() + k), top_inv;
  if (!invert(top, top_inv)) throw NumericalError("CodeSpec: singular Vandermonde block");
  gen_ = multiply(v, top_inv);
  if (n <= 12 && !verify_mds()) throw NumericalError("CodeSpec: generator is not MDS");
}

bool CodeSpec::verify_mds() const {
  std::vector<int> idx(k_);
  std::iota(idx.begin(), idx.end(), 0);
  ByteMatrix sub(k_), tmp;
  for (;;) {
    for (int i = 0; i < k_; ++i) sub[i] = gen_[idx[i]];
    if (!invert(sub, tmp)) return false;
    // next k-combination of 0..n-1 in lexicographic order
    int i = k_ - 1;
    while (i >= 0 && idx[i] == n_ - k_ + i) --i;
    if (i < 0) return true;
    ++idx[i];
    for (int j = i + 1; j < k_; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<Fragment> encode(std::span<const std::uint8_t> data, const CodeSpec& spec) {
  const int k = spec.k();
  if (data.size() % k != 0) throw ParameterError("encode: data length must be a multiple of k");
  const std::size_t len = data.size() / k;
  std::vector<std::vector<std::uint8_t>> src(k);
  for (int i = 0; i < k; ++i) src[i].assign(data.begin() + i * len, data.begin() + (i + 1) * len);
  std::vector<Fragment> out(spec.n());
  for (int i = 0; i < spec.n(); ++i) {
    out[i].symbol_index = i;
    out[i].payload = (i < k) ? src[i] : combine(spec.generator()[i], src, len);
  }
  return out;
}

std::vector<std::uint8_t> decode(std::span<const Fragment> fragments, const CodeSpec& spec) {
  auto src = recover_sources(fragments, spec);
  std::vector<std::uint8_t> out;
  for (auto& s : src) out.insert(out.end(), s.begin(), s.end());
  return out;
}

Fragment regenerate(int target, std::span<const Fragment> fragments, const CodeSpec& spec) {
  if (target < 0 || target >= spec.n()) throw ParameterError("regenerate: target out of range");
  const std::size_t len = check_fragments(fragments, spec);
  for (const auto& f : fragments)
    if (f.symbol_index == target) return f;
  auto src = recover_sources(fragments, spec);
  return Fragment{target, combine(spec.generator()[target], src, len)};
}

}  // namespace liquid
