#ifndef BFC_TESTS_SUPPORT_HPP
#define BFC_TESTS_SUPPORT_HPP

#include "bfc/observed.hpp"
#include "bfc/reconstruct.hpp"

#include <vector>

namespace bfc::testing {

// Observe every entry of a dense matrix under a (levels, leaf) tensorization.
template <typename Scalar>
ObservedEntries<Scalar> observe_all(const Mat<Scalar>& dense, int levels, int leaf) {
  const Index n = dense.rows();
  std::vector<Index> rows, cols;
  std::vector<Scalar> vals;
  rows.reserve(static_cast<std::size_t>(n) * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      rows.push_back(i);
      cols.push_back(j);
      vals.push_back(dense(i, j));
    }
  return ObservedEntries<Scalar>(n, levels, leaf, std::move(rows), std::move(cols),
                                 std::move(vals));
}

template <typename Scalar>
ObservedEntries<Scalar> observe_sampled(const Mat<Scalar>& dense, int levels, int leaf,
                                        std::size_t count, std::uint64_t seed) {
  auto pairs = sample_omega(dense.rows(), count, seed);
  return observe_dense(dense, levels, leaf, pairs);
}

template <typename Scalar>
double rel_frob_error(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  return (a - b).norm() / b.norm();
}

} // namespace bfc::testing

#endif
