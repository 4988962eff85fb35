#ifndef BFC_ALS_HPP
#define BFC_ALS_HPP

#include "bfc/chains.hpp"
#include "bfc/normal.hpp"
#include "bfc/observed.hpp"
#include "bfc/parallel.hpp"
#include "bfc/report.hpp"

#include <chrono>
#include <optional>

namespace bfc {

enum class ConvergenceMetric { train_relative_error };

struct AlsConfig {
  int max_iters = 20;    // t_max
  double tol = 1e-3;     // epsilon on the train relative error
  std::optional<double> reg{}; // ridge; defaults to the scale-aware value
  ConvergenceMetric metric = ConvergenceMetric::train_relative_error;
  bool record_test = true;
  bool record_objective = false;
  int threads = 1;
};

// Scale-aware default ridge: 1e-10 * mean squared observed magnitude.
template <typename Scalar>
double default_ridge(const ObservedEntries<Scalar>& obs) {
  detail::require(!obs.empty(), "default_ridge: empty observed set");
  return 1e-10 * double(obs.squared_norm()) / double(obs.size());
}

template <typename Scalar>
double regularized_objective(const ButterflyNetwork<Scalar>& net,
                             const ObservedEntries<Scalar>& obs, double lambda,
                             int threads = 1) {
  auto x = reconstruct_on(net, obs, threads);
  long double acc = 0;
  for (std::size_t e = 0; e < obs.size(); ++e)
    acc += static_cast<long double>(std::norm(x[e] - obs.value(e)));
  return 0.5 * double(acc) + 0.5 * lambda * double(net.squared_norm());
}

template <typename Scalar>
double regularized_objective(const QttNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                             double lambda, int threads = 1) {
  auto x = reconstruct_on(net, obs, threads);
  long double acc = 0;
  for (std::size_t e = 0; e < obs.size(); ++e)
    acc += static_cast<long double>(std::norm(x[e] - obs.value(e)));
  return 0.5 * double(acc) + 0.5 * lambda * double(net.squared_norm());
}

namespace detail {

// Solve all groups of one factor; groups touch disjoint fibers/slices, so
// any processing order (and any thread count) produces the same cores.
template <typename Scalar>
OpCounters solve_factor_ordered(ButterflyNetwork<Scalar>& net,
                                const ObservedEntries<Scalar>& obs, int factor,
                                double lambda, int threads,
                                const std::vector<std::uint32_t>* group_order) {
  const int L = net.levels;
  const Index r = net.rank;
  const auto& grouping = obs.groups(factor);
  const std::size_t ngroups = grouping.groups.size();
  std::vector<OpCounters> stats(ngroups);

  auto run_group = [&](std::size_t gi) {
    const EntryGroup& grp = grouping.groups[gi];
    OpCounters& ops = stats[gi];
    const Index m = grp.size();
    const bool outer = net.is_outer(factor);
    const Index width = outer ? r : r * r;

    Mat<Scalar> W(m, width);
    Vec<Scalar> t(m);
    Vec<Scalar> u(r), v(r), tmp(r);
    for (Index row = 0; row < m; ++row) {
      const std::size_t e = grouping.order[grp.begin + static_cast<std::uint32_t>(row)];
      t(row) = obs.value(e);
      if (factor == 1) {
        right_chain(net, obs, e, 1, v, tmp);
        W.row(row) = v.transpose();
        ops.chain += L * r * r;
      } else if (factor == L + 2) {
        left_chain(net, obs, e, L, u, tmp);
        W.row(row) = u.transpose();
        ops.chain += L * r * r;
      } else {
        const int l = factor - 1;
        left_chain(net, obs, e, l - 1, u, tmp);
        right_chain(net, obs, e, l + 1, v, tmp);
        for (Index a = 0; a < r; ++a)
          for (Index b = 0; b < r; ++b) W(row, a * r + b) = u(a) * v(b);
        ops.chain += (L - 1) * r * r + r * r;
      }
    }

    NormalSystem<Scalar> sys;
    build_normal_system(W, t, sys);
    ops.gram += m * width * width;
    NormalSolveInfo info;
    Vec<Scalar> s;
    try {
      s = normal_solve(sys, lambda, &info);
    } catch (const std::runtime_error& ex) {
      throw std::runtime_error("solve_factor: factor " + std::to_string(factor) + ", group key " +
                               std::to_string(grp.key) + ": " + ex.what());
    }
    ops.solve += width * width * width;
    if (info.fallback) ++ops.fallbacks;
    ops.entries += m;
    ++ops.groups;

    const std::size_t e0 = grouping.order[grp.begin];
    if (factor == 1) {
      net.cores[0][obs.rev_row(e0)].row(obs.leaf_row(e0)) = s.transpose();
    } else if (factor == L + 2) {
      net.cores[static_cast<std::size_t>(L + 1)][obs.rev_col(e0)].row(obs.leaf_col(e0)) =
          s.transpose();
    } else {
      // row-major reshape of the length r^2 solution
      net.cores[static_cast<std::size_t>(factor - 1)][static_cast<std::size_t>(grp.key)] =
          Eigen::Map<const Mat<Scalar>>(s.data(), r, r);
    }
  };

  if (group_order) {
    for (std::uint32_t gi : *group_order) run_group(gi);
  } else {
    parallel_for(ngroups, threads, run_group);
  }

  OpCounters total;
  for (const auto& st : stats) total += st;
  return total;
}

} // namespace detail

// One least-squares update of `factor` (1..L+2) from the observed entries:
// per fiber/slice group, accumulate the design rows, solve the ridged normal
// equations and write the result back.  Groups without observations keep
// their current values.
template <typename Scalar>
OpCounters solve_factor(ButterflyNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                        int factor, double lambda, int threads = 1) {
  detail::require(factor >= 1 && factor <= net.levels + 2, "solve_factor: factor out of range");
  detail::require(net.levels == obs.levels() && net.leaf == obs.leaf(),
                  "solve_factor: network and entries tensorization mismatch");
  detail::require(lambda >= 0, "solve_factor: negative ridge");
  return detail::solve_factor_ordered(net, obs, factor, lambda, threads, nullptr);
}

namespace detail {

template <typename Net, typename Scalar, typename SweepFn>
ConvergenceReport run_als_loop(Net& net, const EvalSplit<Scalar>& split, const AlsConfig& cfg,
                               SweepFn&& sweep) {
  detail::require(cfg.max_iters >= 1, "als: max_iters must be >= 1");
  detail::require(cfg.tol > 0, "als: tol must be > 0");
  detail::require(!split.train.empty(), "als: empty training set");
  split.validate();

  const double lambda = cfg.reg ? *cfg.reg : default_ridge(split.train);
  detail::require(lambda >= 0, "als: negative ridge");

  ConvergenceReport report;
  report.lambda = lambda;
  const auto t0 = std::chrono::steady_clock::now();
  auto stamp = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const double tic = stamp();
    std::vector<double> trace;
    sweep(lambda, report.ops, cfg.record_objective ? &trace : nullptr);
    if (cfg.record_objective) report.objective_trace.push_back(std::move(trace));

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
  }
  report.total_seconds = stamp();
  return report;
}

} // namespace detail

// Alternating least squares over the butterfly cores: sweeps factors
// 1..L+2 per iteration and records the train (and optionally test) relative
// error after each sweep.
template <typename Scalar>
ConvergenceReport als_butterfly(ButterflyNetwork<Scalar>& net, const EvalSplit<Scalar>& split,
                                const AlsConfig& cfg) {
  net.validate();
  detail::require(net.levels == split.train.levels() && net.leaf == split.train.leaf() &&
                      net.dim() == split.train.n(),
                  "als_butterfly: network and entries tensorization mismatch");
  return detail::run_als_loop(net, split, cfg,
                              [&](double lambda, OpCounters& ops, std::vector<double>* trace) {
                                for (int f = 1; f <= net.levels + 2; ++f) {
                                  ops += detail::solve_factor_ordered(net, split.train, f, lambda,
                                                                      cfg.threads, nullptr);
                                  if (trace)
                                    trace->push_back(regularized_objective(net, split.train,
                                                                           lambda, cfg.threads));
                                }
                              });
}

template <typename Scalar>
struct LowRankResult {
  LowRankPair<Scalar> pair;
  ConvergenceReport report;
};

// L = 0 specialization: the cores are the factor matrices themselves.
// The split must be tensorized at (levels 0, leaf n).
template <typename Scalar>
LowRankResult<Scalar> als_lowrank(LowRankPair<Scalar> pair, const EvalSplit<Scalar>& split,
                                  const AlsConfig& cfg) {
  pair.validate();
  detail::require(split.train.levels() == 0 && split.train.leaf() == split.train.n(),
                  "als_lowrank: split must use the flat (levels = 0) tensorization");
  detail::require(pair.A.rows() == split.train.n(), "als_lowrank: dimension mismatch");

  ButterflyNetwork<Scalar> net;
  net.levels = 0;
  net.leaf = static_cast<int>(pair.A.rows());
  net.rank = static_cast<int>(pair.A.cols());
  net.cores.resize(2);
  net.cores[0].push_back(pair.A);
  net.cores[1].push_back(pair.B.conjugate());

  LowRankResult<Scalar> out;
  out.report = als_butterfly(net, split, cfg);
  out.pair.A = net.cores[0][0];
  out.pair.B = net.cores[1][0].conjugate();
  return out;
}

namespace detail {

// Entry buckets for one QTT core solve: 4 groups for the binary cores,
// leaf^2 for the last; in-bucket order follows the canonical entry order.
template <typename Scalar>
std::vector<std::vector<std::uint32_t>> qtt_groups(const QttNetwork<Scalar>& net,
                                                   const ObservedEntries<Scalar>& obs,
                                                   int core) {
  const std::size_t nslices = static_cast<std::size_t>(net.slice_count(core));
  std::vector<std::vector<std::uint32_t>> buckets(nslices);
  for (std::size_t e = 0; e < obs.size(); ++e)
    buckets[static_cast<std::size_t>(qtt_slice_key(net, obs, e, core))].push_back(
        static_cast<std::uint32_t>(e));
  return buckets;
}

template <typename Scalar>
OpCounters qtt_solve_core(QttNetwork<Scalar>& net, const ObservedEntries<Scalar>& obs,
                          int core, const std::vector<std::vector<std::uint32_t>>& buckets,
                          double lambda, int threads) {
  const int L = net.levels;
  const Index r = net.rank;
  std::vector<OpCounters> stats(buckets.size());

  parallel_for(buckets.size(), threads, [&](std::size_t k) {
    const auto& bucket = buckets[k];
    if (bucket.empty()) return;
    OpCounters& ops = stats[k];
    const bool outer = (core == 1 || core == L + 1);
    const Index width = outer ? r : r * r;
    const Index m = static_cast<Index>(bucket.size());

    Mat<Scalar> W(m, width);
    Vec<Scalar> t(m);
    Vec<Scalar> u(r), v(r), tmp(r);
    for (Index row = 0; row < m; ++row) {
      const std::size_t e = bucket[static_cast<std::size_t>(row)];
      t(row) = obs.value(e);
      if (core == 1) {
        qtt_right_chain(net, obs, e, 1, v, tmp);
        W.row(row) = v.transpose();
      } else if (core == L + 1) {
        qtt_left_chain(net, obs, e, L - 1, u, tmp);
        W.row(row) = u.transpose();
      } else {
        qtt_left_chain(net, obs, e, core - 2, u, tmp);
        qtt_right_chain(net, obs, e, core, v, tmp);
        for (Index a = 0; a < r; ++a)
          for (Index b = 0; b < r; ++b) W(row, a * r + b) = u(a) * v(b);
      }
      ops.chain += L * r * r;
    }

    NormalSystem<Scalar> sys;
    build_normal_system(W, t, sys);
    ops.gram += m * width * width;
    NormalSolveInfo info;
    Vec<Scalar> s = normal_solve(sys, lambda, &info);
    ops.solve += width * width * width;
    if (info.fallback) ++ops.fallbacks;
    ops.entries += m;
    ++ops.groups;

    auto& slice = net.cores[static_cast<std::size_t>(core - 1)][k];
    if (outer)
      slice = s.transpose();
    else
      slice = Eigen::Map<const Mat<Scalar>>(s.data(), r, r);
  });

  OpCounters total;
  for (const auto& st : stats) total += st;
  return total;
}

} // namespace detail

// ALS over the QTT cores; same sweep and convergence contract as the
// butterfly engine with per-core r x r / r^2 x r^2 systems.
template <typename Scalar>
ConvergenceReport als_qtt(QttNetwork<Scalar>& net, const EvalSplit<Scalar>& split,
                          const AlsConfig& cfg) {
  net.validate();
  detail::require(net.levels >= 1, "als_qtt: levels must be >= 1");
  detail::require(net.levels == split.train.levels() && net.leaf == split.train.leaf() &&
                      net.dim() == split.train.n(),
                  "als_qtt: network and entries tensorization mismatch");

  std::vector<std::vector<std::vector<std::uint32_t>>> buckets;
  buckets.reserve(static_cast<std::size_t>(net.core_count()));
  for (int core = 1; core <= net.core_count(); ++core)
    buckets.push_back(detail::qtt_groups(net, split.train, core));

  return detail::run_als_loop(net, split, cfg,
                              [&](double lambda, OpCounters& ops, std::vector<double>* trace) {
                                for (int core = 1; core <= net.core_count(); ++core) {
                                  ops += detail::qtt_solve_core(
                                      net, split.train, core,
                                      buckets[static_cast<std::size_t>(core - 1)], lambda,
                                      cfg.threads);
                                  if (trace)
                                    trace->push_back(regularized_objective(net, split.train,
                                                                           lambda, cfg.threads));
                                }
                              });
}

} // namespace bfc

#endif
