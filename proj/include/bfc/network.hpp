#ifndef BFC_NETWORK_HPP
#define BFC_NETWORK_HPP

#include "bfc/common.hpp"
#include "bfc/indexing.hpp"
#include "bfc/rng.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace bfc {

// Tensorized butterfly parameter set for an n x n matrix, n = c * 2^L.
//
// Cores are stored in the flattened layout: core l holds one dense slice per
// block key.  The outer cores S^1 and S^{L+2} have 2^L slices of shape c x r
// keyed by psi_inv of the L binary row (resp. column) digits; every inner
// core S^{m+1}, m in 1..L, has 2^{L+1} slices of shape r x r keyed by
// psi_inv(i_0..i_{L-m}, j_0..j_{m-1}) with i_0 least significant.  The entry
// at (i, j) is the chained product
//   s^1(i-prefix)(i_L, :) * prod_m S^{m+1}(key_m) * s^{L+2}(j-prefix)(j_L, :).
template <typename Scalar>
struct ButterflyNetwork {
  using Core = std::vector<Mat<Scalar>>;

  int levels = 0; // L
  int leaf = 1;   // c
  int rank = 1;   // r
  std::vector<Core> cores; // L+2 cores

  Index dim() const { return Index(leaf) << levels; }
  int factor_count() const { return levels + 2; }

  bool is_outer(int factor) const { return factor == 1 || factor == levels + 2; }

  Index slice_count(int factor) const {
    return is_outer(factor) ? (Index(1) << levels) : (Index(1) << (levels + 1));
  }

  std::pair<Index, Index> slice_shape(int factor) const {
    return is_outer(factor) ? std::pair<Index, Index>(leaf, rank)
                            : std::pair<Index, Index>(rank, rank);
  }

  // Slice key of core `factor` for matrix entry (i, j), from the packed
  // binary prefixes rev_i = psi_inv(i_0..i_{L-1}), rev_j = psi_inv(j_0..j_{L-1}).
  Index slice_key(int factor, std::uint64_t rev_i, std::uint64_t rev_j) const {
    if (factor == 1) return static_cast<Index>(rev_i);
    if (factor == levels + 2) return static_cast<Index>(rev_j);
    const int m = factor - 1; // inner core S^{m+1}, m in 1..L
    const int ibits = levels - m + 1;
    const std::uint64_t imask = (std::uint64_t(1) << ibits) - 1;
    const std::uint64_t jmask = (std::uint64_t(1) << m) - 1;
    return static_cast<Index>((rev_i & imask) | ((rev_j & jmask) << ibits));
  }

  void validate() const {
    detail::require(levels >= 0 && leaf >= 1 && rank >= 1,
                    "ButterflyNetwork: invalid (levels, leaf, rank)");
    detail::require(cores.size() == static_cast<std::size_t>(levels) + 2,
                    "ButterflyNetwork: core count must be levels + 2");
    for (int f = 1; f <= factor_count(); ++f) {
      const auto& core = cores[static_cast<std::size_t>(f - 1)];
      detail::require(static_cast<Index>(core.size()) == slice_count(f),
                      "ButterflyNetwork: slice count mismatch");
      const auto [rows, cols] = slice_shape(f);
      for (const auto& s : core)
        detail::require(s.rows() == rows && s.cols() == cols,
                        "ButterflyNetwork: slice shape mismatch");
    }
  }

  RealOf<Scalar> squared_norm() const {
    RealOf<Scalar> out = 0;
    for (const auto& core : cores)
      for (const auto& s : core) out += s.squaredNorm();
    return out;
  }

  Index parameter_count() const {
    Index out = 0;
    for (const auto& core : cores)
      for (const auto& s : core) out += s.size();
    return out;
  }
};

// QTT cores for the same tensorization: core 1 has shape (2,2,r), cores
// 2..L shape (2,2,r,r), core L+1 shape (c,c,r).  Slices are keyed by
// i_m + 2*j_m (leaf core: i_L + c*j_L); the order-3 cores store 1 x r slices.
template <typename Scalar>
struct QttNetwork {
  using Core = std::vector<Mat<Scalar>>;

  int levels = 1; // L >= 1
  int leaf = 1;   // c
  int rank = 1;   // r
  std::vector<Core> cores; // L+1 cores

  Index dim() const { return Index(leaf) << levels; }
  int core_count() const { return levels + 1; }

  Index slice_count(int core) const {
    return core == levels + 1 ? Index(leaf) * leaf : 4;
  }

  std::pair<Index, Index> slice_shape(int core) const {
    if (core == 1 || core == levels + 1) return {1, rank};
    return {rank, rank};
  }

  void validate() const {
    detail::require(levels >= 1 && leaf >= 1 && rank >= 1,
                    "QttNetwork: invalid (levels, leaf, rank)");
    detail::require(cores.size() == static_cast<std::size_t>(levels) + 1,
                    "QttNetwork: core count must be levels + 1");
    for (int k = 1; k <= core_count(); ++k) {
      const auto& core = cores[static_cast<std::size_t>(k - 1)];
      detail::require(static_cast<Index>(core.size()) == slice_count(k),
                      "QttNetwork: slice count mismatch");
      const auto [rows, cols] = slice_shape(k);
      for (const auto& s : core)
        detail::require(s.rows() == rows && s.cols() == cols,
                        "QttNetwork: slice shape mismatch");
    }
  }

  RealOf<Scalar> squared_norm() const {
    RealOf<Scalar> out = 0;
    for (const auto& core : cores)
      for (const auto& s : core) out += s.squaredNorm();
    return out;
  }
};

// Rank-R factor pair: X = A * B^H (A * B^T for real scalars).
template <typename Scalar>
struct LowRankPair {
  Mat<Scalar> A; // n x R
  Mat<Scalar> B; // n x R

  Index dim() const { return A.rows(); }
  Index rank() const { return A.cols(); }

  void validate() const {
    detail::require(A.rows() == B.rows() && A.cols() == B.cols(),
                    "LowRankPair: factor shapes must agree");
    detail::require(A.cols() >= 1, "LowRankPair: rank must be >= 1");
  }
};

namespace detail {

template <typename Scalar, typename Net>
void fill_network(Net& net, std::mt19937_64& eng, double scale) {
  for (auto& core : net.cores)
    for (auto& s : core) fill_gaussian(s, eng, scale);
}

} // namespace detail

template <typename Scalar>
ButterflyNetwork<Scalar> butterfly_like(int levels, int leaf, int rank) {
  detail::require(levels >= 0 && leaf >= 1 && rank >= 1,
                  "butterfly_like: invalid (levels, leaf, rank)");
  ButterflyNetwork<Scalar> net;
  net.levels = levels;
  net.leaf = leaf;
  net.rank = rank;
  net.cores.resize(static_cast<std::size_t>(levels) + 2);
  for (int f = 1; f <= net.factor_count(); ++f) {
    const auto [rows, cols] = net.slice_shape(f);
    net.cores[static_cast<std::size_t>(f - 1)]
        .assign(static_cast<std::size_t>(net.slice_count(f)), Mat<Scalar>::Zero(rows, cols));
  }
  return net;
}

// Seeded complex Gaussian cores times `scale`; deterministic per seed.
template <typename Scalar = Cplx>
ButterflyNetwork<Scalar> random_butterfly(int levels, int leaf, int rank,
                                          std::uint64_t seed, double scale = 1.0) {
  auto net = butterfly_like<Scalar>(levels, leaf, rank);
  std::mt19937_64 eng(mix_seed(seed, 0x42f));
  detail::fill_network<Scalar>(net, eng, scale);
  return net;
}

template <typename Scalar = Cplx>
ButterflyNetwork<Scalar> ones_butterfly(int levels, int leaf, int rank) {
  auto net = butterfly_like<Scalar>(levels, leaf, rank);
  for (auto& core : net.cores)
    for (auto& s : core) s.setOnes();
  return net;
}

template <typename Scalar>
QttNetwork<Scalar> qtt_like(int levels, int leaf, int rank) {
  detail::require(levels >= 1 && leaf >= 1 && rank >= 1,
                  "qtt_like: invalid (levels, leaf, rank)");
  QttNetwork<Scalar> net;
  net.levels = levels;
  net.leaf = leaf;
  net.rank = rank;
  net.cores.resize(static_cast<std::size_t>(levels) + 1);
  for (int k = 1; k <= net.core_count(); ++k) {
    const auto [rows, cols] = net.slice_shape(k);
    net.cores[static_cast<std::size_t>(k - 1)]
        .assign(static_cast<std::size_t>(net.slice_count(k)), Mat<Scalar>::Zero(rows, cols));
  }
  return net;
}

template <typename Scalar = Cplx>
QttNetwork<Scalar> random_qtt(int levels, int leaf, int rank, std::uint64_t seed,
                              double scale = 1.0) {
  auto net = qtt_like<Scalar>(levels, leaf, rank);
  std::mt19937_64 eng(mix_seed(seed, 0x177));
  detail::fill_network<Scalar>(net, eng, scale);
  return net;
}

// Normalizing scale for random networks: makes reconstructed entries O(1).
inline double butterfly_entry_scale(int levels, int rank) {
  // entry variance of a product chain with L+2 factors and L+1 bonds of size r
  return std::pow(double(rank), -0.5 * double(levels + 1) / double(levels + 2));
}

inline double qtt_entry_scale(int levels, int rank) {
  return std::pow(double(rank), -0.5 * double(levels) / double(levels + 1));
}

// Gaussian perturbation with relative magnitude eps per core.
template <typename Scalar>
ButterflyNetwork<Scalar> perturbed(const ButterflyNetwork<Scalar>& net, double eps,
                                   std::uint64_t seed) {
  auto out = net;
  std::mt19937_64 eng(mix_seed(seed, 0x9e1));
  for (auto& core : out.cores)
    for (auto& s : core) {
      const double rms = std::sqrt(s.squaredNorm() / double(s.size()));
      Mat<Scalar> noise(s.rows(), s.cols());
      fill_gaussian(noise, eng, eps * rms);
      s += noise;
    }
  return out;
}

template <typename Scalar>
QttNetwork<Scalar> perturbed(const QttNetwork<Scalar>& net, double eps, std::uint64_t seed) {
  auto out = net;
  std::mt19937_64 eng(mix_seed(seed, 0x9e2));
  for (auto& core : out.cores)
    for (auto& s : core) {
      const double rms = std::sqrt(s.squaredNorm() / double(s.size()));
      Mat<Scalar> noise(s.rows(), s.cols());
      fill_gaussian(noise, eng, eps * rms);
      s += noise;
    }
  return out;
}

} // namespace bfc

#endif
