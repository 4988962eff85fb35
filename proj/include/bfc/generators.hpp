#ifndef BFC_GENERATORS_HPP
#define BFC_GENERATORS_HPP

#include "bfc/network.hpp"
#include "bfc/parallel.hpp"
#include "bfc/reconstruct.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

namespace bfc {

// Deterministic constructions of the oscillatory test matrices and of
// synthetic exactly-representable data.

inline double green_default_omega(Index n) {
  return std::sqrt(double(n)) * M_PI / 5.0; // ten points per wavelength
}

// Source-plane points (i1/sqrt(n), i2/sqrt(n)); the observer plane sits at
// unit height above the same grid.
inline std::vector<std::array<double, 2>> green_points(Index n) {
  const Index side = static_cast<Index>(std::llround(std::sqrt(double(n))));
  detail::require(side * side == n, "green_points: n must be a perfect square");
  std::vector<std::array<double, 2>> pts(static_cast<std::size_t>(n));
  const double inv = 1.0 / double(side);
  for (Index i = 0; i < n; ++i)
    pts[static_cast<std::size_t>(i)] = {double(i / side) * inv, double(i % side) * inv};
  return pts;
}

// Unpermuted kernel: t[i][j] = exp(-i omega rho) / rho with
// rho = |x_i - y_j|, y on the parallel plane at height 1.
inline Mat<Cplx> green_kernel(Index n, double omega = -1.0, int threads = 1) {
  auto pts = green_points(n);
  if (omega < 0) omega = green_default_omega(n);
  Mat<Cplx> T(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    for (Index j = 0; j < n; ++j) {
      const double dx = pts[i][0] - pts[static_cast<std::size_t>(j)][0];
      const double dy = pts[i][1] - pts[static_cast<std::size_t>(j)][1];
      const double rho = std::sqrt(dx * dx + dy * dy + 1.0);
      T(static_cast<Index>(i), j) = std::exp(Cplx(0.0, -omega * rho)) / rho;
    }
  });
  return T;
}

// Recursive median bisection of planar points down to leaves of size c.
// Split axis is the one with the larger spread (ties pick x); sorting ties
// fall back to ascending original index; leaves emit ascending indices and
// the permutation concatenates leaves in depth-first order.
inline std::vector<Index> kd_reorder(const std::vector<std::array<double, 2>>& points, int c) {
  detail::require(c >= 1, "kd_reorder: leaf size must be >= 1");
  const std::size_t n = points.size();
  std::size_t blocks = n / static_cast<std::size_t>(c);
  detail::require(blocks * static_cast<std::size_t>(c) == n && (blocks & (blocks - 1)) == 0,
                  "kd_reorder: point count must be leaf * 2^levels");

  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index(0));

  auto split = [&](auto&& self, Index* first, std::size_t count) -> void {
    if (count <= static_cast<std::size_t>(c)) {
      std::sort(first, first + count);
      return;
    }
    double lo[2] = {points[static_cast<std::size_t>(first[0])][0],
                    points[static_cast<std::size_t>(first[0])][1]};
    double hi[2] = {lo[0], lo[1]};
    for (std::size_t k = 1; k < count; ++k)
      for (int ax = 0; ax < 2; ++ax) {
        const double v = points[static_cast<std::size_t>(first[k])][static_cast<std::size_t>(ax)];
        lo[ax] = std::min(lo[ax], v);
        hi[ax] = std::max(hi[ax], v);
      }
    const int axis = (hi[1] - lo[1] > hi[0] - lo[0]) ? 1 : 0;
    std::sort(first, first + count, [&](Index a, Index b) {
      const double va = points[static_cast<std::size_t>(a)][static_cast<std::size_t>(axis)];
      const double vb = points[static_cast<std::size_t>(b)][static_cast<std::size_t>(axis)];
      return va != vb ? va < vb : a < b;
    });
    self(self, first, count / 2);
    self(self, first + count / 2, count / 2);
  };
  split(split, perm.data(), n);
  return perm;
}

template <typename Scalar>
Mat<Scalar> apply_reorder(const Mat<Scalar>& T, const std::vector<Index>& perm) {
  const Index n = T.rows();
  detail::require(static_cast<Index>(perm.size()) == n, "apply_reorder: size mismatch");
  Mat<Scalar> out(n, n);
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      out(a, b) = T(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  return out;
}

struct GreenMatrix {
  Mat<Cplx> matrix;        // P T P^T, ready for completion
  std::vector<Index> perm; // row a of `matrix` is row perm[a] of the kernel
};

// Helmholtz Green's matrix with the KD-tree reordering applied to both sides.
inline GreenMatrix green_helmholtz(Index n, int leaf, double omega = -1.0, int threads = 1) {
  detail::require(leaf >= 1 && n % leaf == 0 &&
                      ((n / leaf) & (n / leaf - 1)) == 0,
                  "green_helmholtz: n must equal leaf * 2^levels");
  GreenMatrix out;
  out.perm = kd_reorder(green_points(n), leaf);
  out.matrix = apply_reorder(green_kernel(n, omega, threads), out.perm);
  return out;
}

// 1D Radon transform matrix: t[i][j] = exp(2 pi i phi(x_i, y_j)),
// phi(x, y) = x y + (2 + sin(2 pi x)) / 8 * |y| on the grids x = i/n,
// y = j - n/2 with 1-based i, j.
inline Mat<Cplx> radon_matrix(Index n, int threads = 1) {
  detail::require(n >= 2 && n % 2 == 0, "radon_matrix: n must be even");
  Mat<Cplx> T(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i0) {
    const double x = double(i0 + 1) / double(n);
    const double cx = (2.0 + std::sin(2.0 * M_PI * x)) / 8.0;
    for (Index j = 0; j < n; ++j) {
      const double y = double(j + 1) - double(n) / 2.0;
      const double phi = x * y + cx * std::abs(y);
      T(static_cast<Index>(i0), j) = std::exp(Cplx(0.0, 2.0 * M_PI * phi));
    }
  });
  return T;
}

// Exactly representable ground-truth data from seeded random networks.
inline Mat<Cplx> synthetic_butterfly(int levels, int leaf, int rank, std::uint64_t seed,
                                     bool ones_fill = false, int threads = 1) {
  auto net = ones_fill ? ones_butterfly(levels, leaf, rank)
                       : random_butterfly(levels, leaf, rank, seed,
                                          butterfly_entry_scale(levels, rank));
  return reconstruct_dense(net, threads);
}

inline Mat<Cplx> synthetic_qtt(int levels, int leaf, int rank, std::uint64_t seed,
                               int threads = 1) {
  auto net = random_qtt(levels, leaf, rank, seed, qtt_entry_scale(levels, rank));
  return reconstruct_dense(net, threads);
}

} // namespace bfc

#endif
