#ifndef BFC_RECONSTRUCT_HPP
#define BFC_RECONSTRUCT_HPP

#include "bfc/network.hpp"
#include "bfc/parallel.hpp"

#include <vector>

namespace bfc {

// X(S)[i, j] by the chained slice product, cost O(L r^2).
template <typename Scalar>
Scalar reconstruct_entry(const ButterflyNetwork<Scalar>& net, Index i, Index j) {
  const Index n = net.dim();
  detail::require_range(i >= 0 && i < n && j >= 0 && j < n,
                        "reconstruct_entry: index out of range");
  const int L = net.levels;
  const std::uint64_t rev_i = bitrev(static_cast<std::uint64_t>(i / net.leaf), L);
  const std::uint64_t rev_j = bitrev(static_cast<std::uint64_t>(j / net.leaf), L);
  const Index il = i % net.leaf;
  const Index jl = j % net.leaf;

  Vec<Scalar> x = net.cores[static_cast<std::size_t>(L + 1)][rev_j].row(jl).transpose();
  for (int m = L; m >= 1; --m) {
    const Index k = net.slice_key(m + 1, rev_i, rev_j);
    x = net.cores[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] * x;
  }
  return (net.cores[0][rev_i].row(il) * x)(0);
}

// Full n x n reconstruction; guarded against accidental huge jobs.
template <typename Scalar>
Mat<Scalar> reconstruct_dense(const ButterflyNetwork<Scalar>& net, int threads = 1,
                              Index max_dim = 8192) {
  const Index n = net.dim();
  detail::require(n <= max_dim, "reconstruct_dense: dimension exceeds size guard");
  Mat<Scalar> out(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    for (Index j = 0; j < n; ++j) out(static_cast<Index>(i), j) = reconstruct_entry(net, static_cast<Index>(i), j);
  });
  return out;
}

template <typename Scalar>
Scalar reconstruct_entry(const QttNetwork<Scalar>& net, Index i, Index j) {
  const Index n = net.dim();
  detail::require_range(i >= 0 && i < n && j >= 0 && j < n,
                        "reconstruct_entry: index out of range");
  const int L = net.levels;
  const std::uint64_t rev_i = bitrev(static_cast<std::uint64_t>(i / net.leaf), L);
  const std::uint64_t rev_j = bitrev(static_cast<std::uint64_t>(j / net.leaf), L);
  auto digit = [](std::uint64_t rev, int m) { return (rev >> m) & 1u; };

  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> x =
      net.cores[0][digit(rev_i, 0) + 2 * digit(rev_j, 0)];
  for (int m = 1; m < L; ++m)
    x = x * net.cores[static_cast<std::size_t>(m)][digit(rev_i, m) + 2 * digit(rev_j, m)];
  const Index kl = (i % net.leaf) + Index(net.leaf) * (j % net.leaf);
  return (x * net.cores[static_cast<std::size_t>(L)][kl].transpose())(0);
}

template <typename Scalar>
Mat<Scalar> reconstruct_dense(const QttNetwork<Scalar>& net, int threads = 1,
                              Index max_dim = 8192) {
  const Index n = net.dim();
  detail::require(n <= max_dim, "reconstruct_dense: dimension exceeds size guard");
  Mat<Scalar> out(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    for (Index j = 0; j < n; ++j) out(static_cast<Index>(i), j) = reconstruct_entry(net, static_cast<Index>(i), j);
  });
  return out;
}

template <typename Scalar>
Scalar reconstruct_entry(const LowRankPair<Scalar>& pair, Index i, Index j) {
  return (pair.A.row(i) * pair.B.row(j).adjoint())(0);
}

template <typename Scalar>
Mat<Scalar> reconstruct_dense(const LowRankPair<Scalar>& pair) {
  return pair.A * pair.B.adjoint();
}

namespace detail {

// Bond-wire block index between consecutive butterfly factor matrices.
// Wire m (m = 1..L+1) carries the digits (i_0..i_{L-m}, j_0..j_{m-2}) plus a
// rank index; blocks are ordered big-endian with i digits high.
inline Index wire_block(std::uint64_t idigits, int icount, std::uint64_t jdigits, int jcount) {
  return static_cast<Index>((bitrev(idigits, icount) << jcount) | bitrev(jdigits, jcount));
}

} // namespace detail

// Assemble the L+2 block-sparse butterfly factor matrices from the cores by
// inverting the slice stacking.  The product S^1 * ... * S^{L+2} equals the
// tensor-network reconstruction; kept as an independent route for testing
// and inspection.  Dense storage, small n only.
template <typename Scalar>
std::vector<Mat<Scalar>> butterfly_factor_matrices(const ButterflyNetwork<Scalar>& net,
                                                   Index max_dim = 4096) {
  net.validate();
  const Index n = net.dim();
  detail::require(n <= max_dim, "butterfly_factor_matrices: dimension exceeds size guard");
  const int L = net.levels;
  const Index r = net.rank;
  const Index wire = (Index(1) << L) * r;

  std::vector<Mat<Scalar>> factors;
  factors.reserve(static_cast<std::size_t>(L) + 2);

  // S^1: n x wire, block-diagonal over leaf blocks
  {
    Mat<Scalar> S = Mat<Scalar>::Zero(n, wire);
    for (std::uint64_t k = 0; k < (std::uint64_t(1) << L); ++k) {
      const Index rowblock = static_cast<Index>(bitrev(k, L)) * net.leaf;
      const Index colblock = detail::wire_block(k, L, 0, 0) * r;
      S.block(rowblock, colblock, net.leaf, r) = net.cores[0][k];
    }
    factors.push_back(std::move(S));
  }

  // inner factors S^{m+1}, m = 1..L: wire x wire
  for (int m = 1; m <= L; ++m) {
    Mat<Scalar> S = Mat<Scalar>::Zero(wire, wire);
    const int ibits = L - m + 1;
    for (std::uint64_t k = 0; k < (std::uint64_t(1) << (L + 1)); ++k) {
      const std::uint64_t ki = k & ((std::uint64_t(1) << ibits) - 1);
      const std::uint64_t kj = k >> ibits;
      // row wire: (i_0..i_{L-m}, j_0..j_{m-2}); column wire: (i_0..i_{L-m-1}, j_0..j_{m-1})
      const Index row = detail::wire_block(ki, ibits, kj & ((std::uint64_t(1) << (m - 1)) - 1), m - 1) * r;
      const Index col = detail::wire_block(ki & ((std::uint64_t(1) << (ibits - 1)) - 1), ibits - 1, kj, m) * r;
      S.block(row, col, r, r) = net.cores[static_cast<std::size_t>(m)][k];
    }
    factors.push_back(std::move(S));
  }

  // S^{L+2}: wire x n
  {
    Mat<Scalar> S = Mat<Scalar>::Zero(wire, n);
    for (std::uint64_t k = 0; k < (std::uint64_t(1) << L); ++k) {
      const Index row = detail::wire_block(0, 0, k, L) * r;
      const Index colblock = static_cast<Index>(bitrev(k, L)) * net.leaf;
      S.block(row, colblock, r, net.leaf) = net.cores[static_cast<std::size_t>(L + 1)][k].transpose();
    }
    factors.push_back(std::move(S));
  }
  return factors;
}

// Dense product of the assembled block-sparse factors.
template <typename Scalar>
Mat<Scalar> butterfly_factor_product(const ButterflyNetwork<Scalar>& net, Index max_dim = 4096) {
  auto factors = butterfly_factor_matrices(net, max_dim);
  Mat<Scalar> out = factors.front();
  for (std::size_t f = 1; f < factors.size(); ++f) out = out * factors[f];
  return out;
}

// u = X(S) * v by right-to-left chained contractions; never forms X.
template <typename Scalar>
Vec<Scalar> matvec(const ButterflyNetwork<Scalar>& net, const Vec<Scalar>& v) {
  const Index n = net.dim();
  detail::require(v.size() == n, "matvec: vector length mismatch");
  const int L = net.levels;
  const Index r = net.rank;

  // y_{L+1}[(j_0..j_{L-1}), :] = S^{L+2} slice^T * leaf block of v
  Vec<Scalar> y((Index(1) << L) * r);
  for (std::uint64_t k = 0; k < (std::uint64_t(1) << L); ++k) {
    const Index start = static_cast<Index>(bitrev(k, L)) * net.leaf;
    y.segment(static_cast<Index>(k) * r, r).noalias() =
        net.cores[static_cast<std::size_t>(L + 1)][k].transpose() * v.segment(start, net.leaf);
  }

  // contract inner cores m = L..1; intermediate keyed by (i_0..i_{L-m}, j_0..j_{m-2})
  for (int m = L; m >= 1; --m) {
    const int ibits = L - m + 1;
    Vec<Scalar> next = Vec<Scalar>::Zero((Index(1) << L) * r);
    for (std::uint64_t k = 0; k < (std::uint64_t(1) << (L + 1)); ++k) {
      const std::uint64_t ki = k & ((std::uint64_t(1) << ibits) - 1);
      const std::uint64_t kj = k >> ibits;
      const std::uint64_t src = (ki & ((std::uint64_t(1) << (ibits - 1)) - 1)) | (kj << (ibits - 1));
      const std::uint64_t dst = ki | ((kj & ((std::uint64_t(1) << (m - 1)) - 1)) << ibits);
      next.segment(static_cast<Index>(dst) * r, r).noalias() +=
          net.cores[static_cast<std::size_t>(m)][k] * y.segment(static_cast<Index>(src) * r, r);
    }
    y.swap(next);
  }

  Vec<Scalar> u(n);
  for (std::uint64_t k = 0; k < (std::uint64_t(1) << L); ++k) {
    const Index start = static_cast<Index>(bitrev(k, L)) * net.leaf;
    u.segment(start, net.leaf).noalias() = net.cores[0][k] * y.segment(static_cast<Index>(k) * r, r);
  }
  return u;
}

template <typename Scalar>
Vec<Scalar> matvec(const LowRankPair<Scalar>& pair, const Vec<Scalar>& v) {
  detail::require(v.size() == pair.dim(), "matvec: vector length mismatch");
  return pair.A * (pair.B.adjoint() * v);
}

} // namespace bfc

#endif
