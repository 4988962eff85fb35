#ifndef BFC_RNG_HPP
#define BFC_RNG_HPP

#include "bfc/common.hpp"

#include <random>

namespace bfc {

// Derive a decorrelated stream seed from (seed, tag).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace detail {

template <typename Scalar>
struct gaussian_draw {
  static Scalar get(std::mt19937_64& eng, std::normal_distribution<double>& dist) {
    return static_cast<Scalar>(dist(eng));
  }
};

template <typename Real>
struct gaussian_draw<std::complex<Real>> {
  static std::complex<Real> get(std::mt19937_64& eng, std::normal_distribution<double>& dist) {
    const double re = dist(eng);
    const double im = dist(eng);
    // standard complex normal: unit total variance
    return std::complex<Real>(static_cast<Real>(re * M_SQRT1_2),
                              static_cast<Real>(im * M_SQRT1_2));
  }
};

} // namespace detail

// Fill a matrix with seeded standard (complex) Gaussian entries, row-major order.
template <typename Derived>
void fill_gaussian(Eigen::MatrixBase<Derived>& m, std::mt19937_64& eng,
                   double scale = 1.0) {
  using Scalar = typename Derived::Scalar;
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = detail::gaussian_draw<Scalar>::get(eng, dist) * RealOf<Scalar>(scale);
}

template <typename Scalar>
Mat<Scalar> gaussian_matrix(Index rows, Index cols, std::mt19937_64& eng, double scale = 1.0) {
  Mat<Scalar> m(rows, cols);
  fill_gaussian(m, eng, scale);
  return m;
}

} // namespace bfc

#endif
