#ifndef BFC_CHAINS_HPP
#define BFC_CHAINS_HPP

#include "bfc/network.hpp"
#include "bfc/observed.hpp"

namespace bfc {
namespace detail {

// Partial chain products through the inner cores for one observed entry.
// Left chains run s^1-fiber^T * S^2 ... ; right chains run ... S^{L+1} * s^{L+2}-fiber.
// Both return a length-r vector; the bond index is r_{mto+1} resp. r_{mfrom}.

template <typename Scalar>
void right_chain(const ButterflyNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                 std::size_t e, int mfrom, Vec<Scalar>& x, Vec<Scalar>& tmp) {
  const int L = net.levels;
  x = net.cores[static_cast<std::size_t>(L + 1)][obs.rev_col(e)].row(obs.leaf_col(e)).transpose();
  for (int m = L; m >= mfrom; --m) {
    const Index k = net.slice_key(m + 1, obs.rev_row(e), obs.rev_col(e));
    tmp.noalias() = net.cores[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] * x;
    x.swap(tmp);
  }
}

template <typename Scalar>
void left_chain(const ButterflyNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                std::size_t e, int mto, Vec<Scalar>& x, Vec<Scalar>& tmp) {
  x = net.cores[0][obs.rev_row(e)].row(obs.leaf_row(e)).transpose();
  for (int m = 1; m <= mto; ++m) {
    const Index k = net.slice_key(m + 1, obs.rev_row(e), obs.rev_col(e));
    tmp.noalias() =
        net.cores[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)].transpose() * x;
    x.swap(tmp);
  }
}

// QTT analogues.  Core m (0-based) of entry e is selected by (i_m, j_m);
// chains run through the order-4 cores 1..L-1.

template <typename Scalar>
Index qtt_slice_key(const QttNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                    std::size_t e, int core /* 1-based */) {
  const int L = net.levels;
  if (core == L + 1)
    return obs.leaf_row(e) + Index(net.leaf) * obs.leaf_col(e);
  const int m = core - 1;
  return Index((obs.rev_row(e) >> m) & 1u) + 2 * Index((obs.rev_col(e) >> m) & 1u);
}

template <typename Scalar>
void qtt_right_chain(const QttNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                     std::size_t e, int mfrom, Vec<Scalar>& x, Vec<Scalar>& tmp) {
  const int L = net.levels;
  x = net.cores[static_cast<std::size_t>(L)]
          [static_cast<std::size_t>(qtt_slice_key(net, obs, e, L + 1))]
              .row(0)
              .transpose();
  for (int m = L - 1; m >= mfrom; --m) {
    const Index k = qtt_slice_key(net, obs, e, m + 1);
    tmp.noalias() = net.cores[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] * x;
    x.swap(tmp);
  }
}

template <typename Scalar>
void qtt_left_chain(const QttNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                    std::size_t e, int mto, Vec<Scalar>& x, Vec<Scalar>& tmp) {
  x = net.cores[0][static_cast<std::size_t>(qtt_slice_key(net, obs, e, 1))].row(0).transpose();
  for (int m = 1; m <= mto; ++m) {
    const Index k = qtt_slice_key(net, obs, e, m + 1);
    tmp.noalias() =
        net.cores[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)].transpose() * x;
    x.swap(tmp);
  }
}

} // namespace detail
} // namespace bfc

#endif
