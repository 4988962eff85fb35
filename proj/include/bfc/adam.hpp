#ifndef BFC_ADAM_HPP
#define BFC_ADAM_HPP

#include "bfc/als.hpp"
#include "bfc/chains.hpp"

#include <chrono>

namespace bfc {

struct AdamOptions {
  double alpha = 1e-3;  // learning rate
  double beta1 = 0.9;   // first-moment decay
  double beta2 = 0.999; // second-moment decay
  double sigma = 1e-8;  // small constant under the square root
};

struct AdamConfig {
  int max_iters = 100;
  double tol = 1e-3;
  AdamOptions hyper;
  bool record_test = true;
  int threads = 1;
  double divergence_factor = 1e3; // abort when train error exceeds this times its start
};

// First/second moment estimates mirroring the core shapes; v is real.
template <typename Scalar>
struct AdamState {
  using Real = RealOf<Scalar>;
  std::vector<std::vector<Mat<Scalar>>> m;
  std::vector<std::vector<Mat<Real>>> v;
  long t = 0;

  template <typename Net>
  static AdamState zeros_like(const Net& net) {
    AdamState st;
    st.m.resize(net.cores.size());
    st.v.resize(net.cores.size());
    for (std::size_t c = 0; c < net.cores.size(); ++c) {
      st.m[c].reserve(net.cores[c].size());
      st.v[c].reserve(net.cores[c].size());
      for (const auto& s : net.cores[c]) {
        st.m[c].push_back(Mat<Scalar>::Zero(s.rows(), s.cols()));
        st.v[c].push_back(Mat<Real>::Zero(s.rows(), s.cols()));
      }
    }
    return st;
  }
};

// Sparse residual Z = P_Omega(X(S) - T) plus per-core gradient tensors.
template <typename Scalar>
struct GradientSet {
  std::vector<std::vector<Mat<Scalar>>> cores;
  std::vector<Scalar> residual;
};

// z_e = X(S)[e] - t_e on the observed set.
template <typename Scalar>
std::vector<Scalar> residual_on_omega(const ButterflyNetwork<Scalar>& net,
                                      const ObservedEntries<Scalar>& obs, int threads = 1) {
  auto x = reconstruct_on(net, obs, threads);
  for (std::size_t e = 0; e < obs.size(); ++e) x[e] -= obs.value(e);
  return x;
}

namespace detail {

// Gradient of 1/2 || P_Omega(T - X) ||_F^2 with respect to one factor's
// slices, as the conjugate direction: a step -alpha * g decreases the
// objective.  Accumulates z_e times the conjugated partial chain products.
template <typename Scalar>
std::vector<Mat<Scalar>> factor_gradient(const ButterflyNetwork<Scalar>& net,
                                         const ObservedEntries<Scalar>& obs, int factor,
                                         const std::vector<Scalar>& residual, int threads) {
  const int L = net.levels;
  const Index r = net.rank;
  const auto& core = net.cores[static_cast<std::size_t>(factor - 1)];
  std::vector<Mat<Scalar>> grad(core.size());
  for (std::size_t k = 0; k < core.size(); ++k)
    grad[k] = Mat<Scalar>::Zero(core[k].rows(), core[k].cols());

  const auto& grouping = obs.groups(factor);
  parallel_for(grouping.groups.size(), threads, [&](std::size_t gi) {
    const EntryGroup& grp = grouping.groups[gi];
    Vec<Scalar> u(r), v(r), tmp(r);
    for (std::uint32_t p = grp.begin; p < grp.end; ++p) {
      const std::size_t e = grouping.order[p];
      const Scalar z = residual[e];
      if (factor == 1) {
        right_chain(net, obs, e, 1, v, tmp);
        grad[obs.rev_row(e)].row(obs.leaf_row(e)) += z * v.conjugate().transpose();
      } else if (factor == L + 2) {
        left_chain(net, obs, e, L, u, tmp);
        grad[obs.rev_col(e)].row(obs.leaf_col(e)) += z * u.conjugate().transpose();
      } else {
        const int l = factor - 1;
        left_chain(net, obs, e, l - 1, u, tmp);
        right_chain(net, obs, e, l + 1, v, tmp);
        grad[static_cast<std::size_t>(grp.key)].noalias() +=
            z * (u.conjugate() * v.adjoint());
      }
    }
  });
  return grad;
}

} // namespace detail

// Gradients with respect to every core at the current parameters.
template <typename Scalar>
GradientSet<Scalar> butterfly_gradients(const ButterflyNetwork<Scalar>& net,
                                        const ObservedEntries<Scalar>& obs, int threads = 1) {
  net.validate();
  detail::require(net.levels == obs.levels() && net.leaf == obs.leaf(),
                  "butterfly_gradients: tensorization mismatch");
  GradientSet<Scalar> out;
  out.residual = residual_on_omega(net, obs, threads);
  for (const auto& v : out.residual)
    if (!std::isfinite(std::abs(v)))
      throw std::runtime_error("butterfly_gradients: non-finite residual");
  out.cores.reserve(net.cores.size());
  for (int f = 1; f <= net.factor_count(); ++f)
    out.cores.push_back(detail::factor_gradient(net, obs, f, out.residual, threads));
  return out;
}

// Entrywise ADAM update with bias correction; complex parameters share one
// real second-moment magnitude per entry.
template <typename Scalar>
void adam_update(Mat<Scalar>& s, const Mat<Scalar>& g, Mat<Scalar>& m,
                 Mat<RealOf<Scalar>>& v, long t, const AdamOptions& opt) {
  using Real = RealOf<Scalar>;
  detail::require(t >= 1, "adam_update: step counter must be >= 1 (bias correction)");
  detail::require(s.rows() == g.rows() && s.cols() == g.cols() && m.rows() == s.rows() &&
                      v.rows() == s.rows() && m.cols() == s.cols() && v.cols() == s.cols(),
                  "adam_update: shape mismatch");
  const Real b1 = Real(opt.beta1), b2 = Real(opt.beta2);
  m = b1 * m + (Real(1) - b1) * g;
  v = b2 * v + (Real(1) - b2) * g.array().abs2().matrix();
  const Real c1 = Real(1) - Real(std::pow(opt.beta1, double(t)));
  const Real c2 = Real(1) - Real(std::pow(opt.beta2, double(t)));
  Mat<Real> denom = (v / c2).array().sqrt() + Real(opt.sigma);
  s.array() -= Real(opt.alpha) * (m / c1).array() *
               denom.array().inverse().template cast<Scalar>();
}

// ADAM over the butterfly cores.  Each iteration recomputes the residual and
// gradient per factor and updates only that factor, in factor order.
template <typename Scalar>
ConvergenceReport adam_butterfly(ButterflyNetwork<Scalar>& net, const EvalSplit<Scalar>& split,
                                 const AdamConfig& cfg) {
  net.validate();
  detail::require(cfg.max_iters >= 1, "adam_butterfly: max_iters must be >= 1");
  detail::require(cfg.tol > 0, "adam_butterfly: tol must be > 0");
  detail::require(!split.train.empty(), "adam_butterfly: empty training set");
  detail::require(net.levels == split.train.levels() && net.leaf == split.train.leaf() &&
                      net.dim() == split.train.n(),
                  "adam_butterfly: tensorization mismatch");
  split.validate();

  auto state = AdamState<Scalar>::zeros_like(net);
  ConvergenceReport report;
  const double initial_err = double(relative_error(net, split.train, cfg.threads));
  const auto t0 = std::chrono::steady_clock::now();
  auto stamp = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const double tic = stamp();
    state.t = iter;
    for (int f = 1; f <= net.factor_count(); ++f) {
      auto residual = residual_on_omega(net, split.train, cfg.threads);
      auto grad = detail::factor_gradient(net, split.train, f, residual, cfg.threads);
      auto& core = net.cores[static_cast<std::size_t>(f - 1)];
      for (std::size_t k = 0; k < core.size(); ++k) {
        if (!grad[k].allFinite())
          throw std::runtime_error("adam_butterfly: non-finite gradient in factor " +
                                   std::to_string(f));
        adam_update(core[k], grad[k], state.m[static_cast<std::size_t>(f - 1)][k],
                    state.v[static_cast<std::size_t>(f - 1)][k], state.t, cfg.hyper);
      }
      report.ops.entries += static_cast<std::int64_t>(split.train.size());
    }

    IterationRecord rec;
    rec.iter = iter;
    rec.train_err = double(relative_error(net, split.train, cfg.threads));
    if (cfg.record_test && !split.test.empty())
      rec.test_err = double(relative_error(net, split.test, cfg.threads));
    rec.seconds = stamp() - tic;
    report.records.push_back(std::move(rec));

    if (report.records.back().train_err < cfg.tol) {
      report.termination = "converged";
      break;
    }
    if (report.records.back().train_err > cfg.divergence_factor * std::max(initial_err, 1e-300)) {
      report.termination = "diverged";
      report.records.back().flags.push_back("divergence_guard");
      break;
    }
  }
  report.total_seconds = stamp();
  return report;
}

} // namespace bfc

#endif
