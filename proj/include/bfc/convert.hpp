#ifndef BFC_CONVERT_HPP
#define BFC_CONVERT_HPP

#include "bfc/als.hpp"
#include "bfc/network.hpp"
#include "bfc/rng.hpp"

#include <Eigen/QR>

namespace bfc {

// Truncated pivoted QR: Q holds the first r orthonormal columns of the
// pivoted factorization, V the projection Q^H * payload (payload defaults to
// the input itself).
template <typename Scalar>
struct QrcpResult {
  Mat<Scalar> Q; // rows x r, orthonormal columns
  Mat<Scalar> V; // r x payload-cols
};

template <typename Scalar>
QrcpResult<Scalar> qrcp_truncate(const Mat<Scalar>& M, int r,
                                 const Mat<Scalar>* payload = nullptr) {
  detail::require(r >= 1 && r <= std::min(M.rows(), M.cols()),
                  "qrcp_truncate: rank exceeds matrix dimensions");
  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(M);
  QrcpResult<Scalar> out;
  out.Q = qr.householderQ() * Mat<Scalar>::Identity(M.rows(), r);
  out.V = out.Q.adjoint() * (payload ? *payload : M);
  return out;
}

namespace detail {

// key packing for the conversion intermediates: i digits low, j digits high
inline std::size_t vw_key(std::uint64_t ik, std::uint64_t jk, int ibits) {
  return static_cast<std::size_t>(ik | (jk << ibits));
}

} // namespace detail

// Convert a rank-R factorization X = A B^H into L-level butterfly cores of
// rank r by levelwise randomized sketching with oversampling p.  Exact (up
// to roundoff) whenever every row/column node block of X has rank <= r, in
// particular whenever R <= r.
template <typename Scalar>
ButterflyNetwork<Scalar> lr_to_butterfly(const LowRankPair<Scalar>& pair, int levels, int rank,
                                         int oversampling, std::uint64_t seed = 0) {
  pair.validate();
  detail::require(levels >= 0, "lr_to_butterfly: negative level count");
  detail::require(levels % 2 == 0, "lr_to_butterfly: level count must be even (H = L/2)");
  detail::require(rank >= 1, "lr_to_butterfly: rank must be >= 1");
  detail::require(oversampling >= 0, "lr_to_butterfly: negative oversampling");
  const Index n = pair.dim();
  detail::require(n % (Index(1) << levels) == 0,
                  "lr_to_butterfly: dimension not divisible by 2^levels");
  const int c = static_cast<int>(n >> levels);

  const int L = levels;
  const int H = L / 2;
  const Index r = rank;
  const Index w = r + oversampling;
  const Index R = pair.rank();
  const Mat<Scalar>& A = pair.A;
  const Mat<Scalar>& B = pair.B;

  std::mt19937_64 eng(mix_seed(seed, 0x12b));
  auto net = butterfly_like<Scalar>(L, c, rank);

  // outer level: leaf column bases of X and X^H, then project the factors.
  // A leaf block only carries min(r, c) basis vectors; wide cores (r > c)
  // pad with zero columns and the projections with zero rows.
  const Index qcols = std::min<Index>(r, c);
  std::vector<Mat<Scalar>> V(std::size_t(1) << L), W(std::size_t(1) << L);
  {
    const Mat<Scalar> O = gaussian_matrix<Scalar>(n, w, eng);
    const Mat<Scalar> M = A * (B.adjoint() * O);
    const Mat<Scalar> N = B * (A.adjoint() * O);
    for (std::uint64_t k = 0; k < (std::uint64_t(1) << L); ++k) {
      const Index start = static_cast<Index>(bitrev(k, L)) * c;
      const Mat<Scalar> Ablk = A.middleRows(start, c);
      const Mat<Scalar> Bblk = B.middleRows(start, c);
      const Mat<Scalar> Mblk = M.middleRows(start, c);
      const Mat<Scalar> Nblk = N.middleRows(start, c);
      auto qa = qrcp_truncate(Mblk, static_cast<int>(qcols), &Ablk);
      auto qb = qrcp_truncate(Nblk, static_cast<int>(qcols), &Bblk);
      net.cores[0][k].setZero();
      net.cores[0][k].leftCols(qcols) = qa.Q;
      net.cores[std::size_t(L + 1)][k].setZero();
      net.cores[std::size_t(L + 1)][k].leftCols(qcols) = qb.Q.conjugate();
      V[k] = Mat<Scalar>::Zero(r, R);
      V[k].topRows(qcols) = qa.V;
      W[k] = Mat<Scalar>::Zero(r, R);
      W[k].topRows(qcols) = qb.V;
    }
  }

  // inner levels: transfer blocks from sketches of the projected factors,
  // stacking the two sibling blocks of the refined side
  for (int l = 1; l <= H; ++l) {
    const Index mlen = n >> l;
    const Mat<Scalar> O = gaussian_matrix<Scalar>(mlen, w, eng);
    std::vector<Mat<Scalar>> C(std::size_t(1) << l), D(std::size_t(1) << l);
    for (std::uint64_t k = 0; k < (std::uint64_t(1) << l); ++k) {
      const Index start = static_cast<Index>(bitrev(k, l)) * mlen;
      C[k] = B.middleRows(start, mlen).adjoint() * O; // column-node sketches
      D[k] = A.middleRows(start, mlen).adjoint() * O; // row-node sketches
    }

    // row side: S^{l+1}; keys (i_0..i_{L-l-1}, j_0..j_{l-1})
    std::vector<Mat<Scalar>> Vnew(std::size_t(1) << L);
    for (std::uint64_t ik = 0; ik < (std::uint64_t(1) << (L - l)); ++ik)
      for (std::uint64_t jk = 0; jk < (std::uint64_t(1) << l); ++jk) {
        const std::uint64_t jparent = jk & ((std::uint64_t(1) << (l - 1)) - 1);
        Mat<Scalar> stack(2 * r, R);
        for (std::uint64_t h = 0; h < 2; ++h)
          stack.middleRows(static_cast<Index>(h) * r, r) =
              V[detail::vw_key(ik | (h << (L - l)), jparent, L - l + 1)];
        const Mat<Scalar> sketch = stack * C[jk];
        auto q = qrcp_truncate(sketch, rank, &stack);
        for (std::uint64_t h = 0; h < 2; ++h)
          net.cores[std::size_t(l)][detail::vw_key(ik | (h << (L - l)), jk, L - l + 1)] =
              q.Q.middleRows(static_cast<Index>(h) * r, r);
        Vnew[detail::vw_key(ik, jk, L - l)] = std::move(q.V);
      }
    V.swap(Vnew);

    // column side: S^{L+2-l}; keys (i_0..i_{l-1}, j_0..j_{L-l-1})
    std::vector<Mat<Scalar>> Wnew(std::size_t(1) << L);
    for (std::uint64_t jk = 0; jk < (std::uint64_t(1) << (L - l)); ++jk)
      for (std::uint64_t ik = 0; ik < (std::uint64_t(1) << l); ++ik) {
        const std::uint64_t iparent = ik & ((std::uint64_t(1) << (l - 1)) - 1);
        Mat<Scalar> stack(2 * r, R);
        for (std::uint64_t h = 0; h < 2; ++h)
          stack.middleRows(static_cast<Index>(h) * r, r) =
              W[detail::vw_key(iparent, jk | (h << (L - l)), l - 1)];
        const Mat<Scalar> sketch = stack * D[ik];
        auto q = qrcp_truncate(sketch, rank, &stack);
        // stored transposed-conjugated so the left-to-right chain applies it
        for (std::uint64_t h = 0; h < 2; ++h)
          net.cores[std::size_t(L - l + 1)]
                   [detail::vw_key(ik, jk | (h << (L - l)), l)] =
              q.Q.middleRows(static_cast<Index>(h) * r, r).adjoint();
        Wnew[detail::vw_key(ik, jk, l)] = std::move(q.V);
      }
    W.swap(Wnew);
  }

  // middle merge: contract the projected factors into S^{H+1}
  if (L == 0) {
    net.cores[0][0] = net.cores[0][0] * (V[0] * W[0].adjoint());
  } else {
    for (std::uint64_t ik = 0; ik < (std::uint64_t(1) << H); ++ik)
      for (std::uint64_t jk = 0; jk < (std::uint64_t(1) << H); ++jk) {
        const Mat<Scalar> G =
            V[detail::vw_key(ik, jk, H)] * W[detail::vw_key(ik, jk, H)].adjoint();
        for (std::uint64_t h = 0; h < 2; ++h) {
          auto& slice =
              net.cores[std::size_t(H)][detail::vw_key(ik | (h << H), jk, H + 1)];
          slice = Mat<Scalar>(slice * G);
        }
      }
  }
  return net;
}

struct InitialGuessConfig {
  int lowrank_iters = 10;             // constant low-rank completion budget
  std::optional<int> init_rank{};     // R; defaults to the butterfly rank
  std::optional<int> oversampling{};  // p; defaults to min(10, r)
  std::optional<double> reg{};
  std::uint64_t seed = 0;
  int threads = 1;
};

template <typename Scalar>
struct InitialGuess {
  ButterflyNetwork<Scalar> net;
  double lowrank_train_error = 0;
  int init_rank_used = 0;
  int oversampling_used = 0;
  ConvergenceReport lowrank_report;
};

// Butterfly initial guess: a short low-rank completion from seeded random
// factors, converted to L-level rank-r cores.  A rough low-rank fit is
// enough to seed the butterfly optimizers.
template <typename Scalar>
InitialGuess<Scalar> generate_initial_guess(const ObservedEntries<Scalar>& train, int levels,
                                            int leaf, int rank,
                                            const InitialGuessConfig& cfg = {}) {
  detail::require(train.n() == (Index(leaf) << levels),
                  "generate_initial_guess: entries not tensorizable at (levels, leaf)");
  const int R = cfg.init_rank.value_or(rank);
  detail::require(R >= 1, "generate_initial_guess: init rank must be >= 1");
  const int p = cfg.oversampling ? *cfg.oversampling : std::min(10, rank);

  const Index n = train.n();
  auto flat = train.retensorized(0, static_cast<int>(n));
  const double scale =
      std::sqrt(double(flat.squared_norm())) / std::sqrt(double(flat.size()) * double(R));

  std::mt19937_64 eng(mix_seed(cfg.seed, 0xa11));
  LowRankPair<Scalar> pair{gaussian_matrix<Scalar>(n, R, eng, scale),
                           gaussian_matrix<Scalar>(n, R, eng, scale)};

  AlsConfig als;
  als.max_iters = cfg.lowrank_iters;
  als.tol = 1e-12;
  als.reg = cfg.reg;
  als.record_test = false;
  als.threads = cfg.threads;
  EvalSplit<Scalar> split;
  split.train = std::move(flat);
  auto lr = als_lowrank(std::move(pair), split, als);

  InitialGuess<Scalar> out;
  out.net = lr_to_butterfly(lr.pair, levels, rank, p, mix_seed(cfg.seed, 0xa12));
  out.lowrank_train_error = lr.report.final_train();
  out.init_rank_used = R;
  out.oversampling_used = p;
  out.lowrank_report = std::move(lr.report);
  return out;
}

} // namespace bfc

#endif
