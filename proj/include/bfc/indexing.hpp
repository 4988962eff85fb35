#ifndef BFC_INDEXING_HPP
#define BFC_INDEXING_HPP

#include "bfc/common.hpp"

#include <span>
#include <vector>

namespace bfc {

// Index bijections for the n = c * 2^L tensorization.
//
// A flat index i in {0..n-1} maps to the digit tuple (i_0, ..., i_L) where
// i_0..i_{L-1} are the binary digits of i/c from most significant to least,
// and i_L = i mod c is the leaf offset.  Flattened block keys pack binary
// digit tuples with the first listed digit least significant.

// Reverse the low `bits` bits of x.
inline std::uint64_t bitrev(std::uint64_t x, int bits) {
  std::uint64_t out = 0;
  for (int t = 0; t < bits; ++t) out |= ((x >> t) & 1u) << (bits - 1 - t);
  return out;
}

// psi: integer in {0..2^l-1} -> binary tuple (b_0..b_{l-1}), b_0 least significant.
inline std::vector<int> psi(Index i, int bits) {
  detail::require(bits >= 0, "psi: negative bit count");
  detail::require_range(i >= 0 && i < (Index(1) << bits), "psi: index out of range");
  std::vector<int> b(static_cast<std::size_t>(bits));
  for (int m = 0; m < bits; ++m) b[static_cast<std::size_t>(m)] = static_cast<int>((i >> m) & 1);
  return b;
}

// psi_inv: binary tuple -> integer, sum of b_m * 2^m.
inline Index psi_inv(std::span<const int> bits) {
  Index out = 0;
  for (std::size_t m = 0; m < bits.size(); ++m) {
    detail::require_range(bits[m] == 0 || bits[m] == 1, "psi_inv: digit out of range");
    out |= Index(bits[m]) << m;
  }
  return out;
}

inline Index psi_inv(const std::vector<int>& bits) {
  return psi_inv(std::span<const int>(bits.data(), bits.size()));
}

// Digit tuple bijections for one tensorization (levels L, leaf size c).
// Stateless; all members are pure.
struct IndexMap {
  int levels = 0; // L
  int leaf = 1;   // c

  IndexMap(int L, int c) : levels(L), leaf(c) {
    detail::require(L >= 0, "IndexMap: levels must be >= 0");
    detail::require(c >= 1, "IndexMap: leaf must be >= 1");
  }

  Index dim() const { return Index(leaf) << levels; }

  // (i_0..i_L): i_l = floor(i / (c*2^{L-l-1})) mod 2 for l < L, i_L = i mod c.
  std::vector<int> index_to_tuple(Index i) const {
    detail::require_range(i >= 0 && i < dim(), "index_to_tuple: index out of range");
    std::vector<int> t(static_cast<std::size_t>(levels) + 1);
    for (int l = 0; l < levels; ++l)
      t[static_cast<std::size_t>(l)] =
          static_cast<int>((i / (Index(leaf) << (levels - l - 1))) % 2);
    t[static_cast<std::size_t>(levels)] = static_cast<int>(i % leaf);
    return t;
  }

  Index tuple_to_flat(std::span<const int> t) const {
    detail::require(t.size() == static_cast<std::size_t>(levels) + 1,
                    "tuple_to_flat: digit count mismatch");
    Index i = 0;
    for (int l = 0; l < levels; ++l) {
      const int d = t[static_cast<std::size_t>(l)];
      detail::require_range(d == 0 || d == 1, "tuple_to_flat: binary digit out of range");
      i += Index(d) * (Index(leaf) << (levels - l - 1));
    }
    const int dl = t[static_cast<std::size_t>(levels)];
    detail::require_range(dl >= 0 && dl < leaf, "tuple_to_flat: leaf digit out of range");
    return i + dl;
  }

  Index tuple_to_flat(const std::vector<int>& t) const {
    return tuple_to_flat(std::span<const int>(t.data(), t.size()));
  }

  // psi_inv of the L binary digits of i; the leaf digit is excluded.
  // Equals the flattened slice key of the outer cores.
  Index binary_prefix_key(Index i) const {
    detail::require_range(i >= 0 && i < dim(), "binary_prefix_key: index out of range");
    return static_cast<Index>(bitrev(static_cast<std::uint64_t>(i / leaf), levels));
  }

  Index leaf_digit(Index i) const {
    detail::require_range(i >= 0 && i < dim(), "leaf_digit: index out of range");
    return i % leaf;
  }
};

// Flattened slice key of core `factor` (1-based, 1..L+2) from its binary
// prefix digits.  Outer cores take L digits, inner cores L+1; the first
// listed digit is least significant.
inline Index block_key(int levels, int factor, std::span<const int> digits) {
  detail::require(factor >= 1 && factor <= levels + 2, "block_key: factor out of range");
  const bool outer = (factor == 1 || factor == levels + 2);
  const std::size_t arity = static_cast<std::size_t>(outer ? levels : levels + 1);
  detail::require(digits.size() == arity, "block_key: digit arity mismatch for factor");
  return psi_inv(digits);
}

inline Index block_key(int levels, int factor, const std::vector<int>& digits) {
  return block_key(levels, factor, std::span<const int>(digits.data(), digits.size()));
}

} // namespace bfc

#endif
