#ifndef BFC_NORMAL_HPP
#define BFC_NORMAL_HPP

#include "bfc/common.hpp"
#include "bfc/report.hpp"

#include <Eigen/Cholesky>

namespace bfc {

// Hermitian positive semi-definite normal-equation system K s = y.
template <typename Scalar>
struct NormalSystem {
  Mat<Scalar> K;
  Vec<Scalar> y;
};

// Accumulate K = W^H W and y = W^H t for design-row matrix W (rows are the
// per-entry rows); K is materialized from the lower triangle so it is
// Hermitian by construction.
template <typename Scalar>
void build_normal_system(const Mat<Scalar>& W, const Vec<Scalar>& t,
                         NormalSystem<Scalar>& sys) {
  const Index k = W.cols();
  sys.K.setZero(k, k);
  sys.K.template selfadjointView<Eigen::Lower>().rankUpdate(W.adjoint());
  sys.K = Mat<Scalar>(sys.K.template selfadjointView<Eigen::Lower>());
  sys.y.noalias() = W.adjoint() * t;
}

struct NormalSolveInfo {
  bool fallback = false;
  double lambda_used = 0;
};

// Solve (K + lambda I) s = y by Hermitian LDLT.  With lambda = 0 a singular
// K falls back to the scale ridge 1e-12 * trace(K) / dim, reported in info.
template <typename Scalar>
Vec<Scalar> normal_solve(const NormalSystem<Scalar>& sys, double lambda,
                         NormalSolveInfo* info = nullptr) {
  using Real = RealOf<Scalar>;
  const Index k = sys.K.rows();
  detail::require(sys.K.cols() == k && sys.y.size() == k,
                  "normal_solve: dimension mismatch");
  if (info) *info = {false, lambda};
  if (!sys.K.allFinite() || !sys.y.allFinite())
    throw std::runtime_error("normal_solve: non-finite accumulation");

  auto factor_and_check = [&](double ridge, Vec<Scalar>& out) {
    Mat<Scalar> A = sys.K;
    A.diagonal().array() += Real(ridge);
    Eigen::LDLT<Mat<Scalar>> ldlt(A);
    if (ldlt.info() != Eigen::Success) return false;
    const auto d = ldlt.vectorD();
    Real dmax = 0;
    for (Index i = 0; i < k; ++i) dmax = std::max(dmax, std::abs(Eigen::numext::real(d(i))));
    if (dmax == Real(0)) {
      // zero system: zero right-hand side has the zero minimizer
      if (sys.y.norm() == Real(0)) {
        out.setZero(k);
        return true;
      }
      return false;
    }
    for (Index i = 0; i < k; ++i)
      if (Eigen::numext::real(d(i)) <= Real(1e-13) * dmax) return false;
    out = ldlt.solve(sys.y);
    return true;
  };

  Vec<Scalar> s(k);
  if (factor_and_check(lambda, s)) return s;

  const double fb =
      lambda + 1e-12 * std::abs(double(Eigen::numext::real(sys.K.trace()))) / double(k);
  if (info) *info = {true, fb};
  if (!factor_and_check(fb, s)) {
    // last resort: pivoted solve of the ridged system
    Mat<Scalar> A = sys.K;
    A.diagonal().array() += Real(fb);
    s = A.completeOrthogonalDecomposition().solve(sys.y);
  }
  return s;
}

} // namespace bfc

#endif
