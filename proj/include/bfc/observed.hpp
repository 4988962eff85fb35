#ifndef BFC_OBSERVED_HPP
#define BFC_OBSERVED_HPP

#include "bfc/network.hpp"
#include "bfc/parallel.hpp"
#include "bfc/reconstruct.hpp"
#include "bfc/rng.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

namespace bfc {

// One contiguous run of entry positions sharing a factor's slice/fiber key.
struct EntryGroup {
  std::uint64_t key = 0;
  std::uint32_t begin = 0; // into the factor's order array
  std::uint32_t end = 0;
  std::uint32_t size() const { return end - begin; }
};

// Grouped view of the observed set for one factor solve.
struct FactorGrouping {
  std::vector<std::uint32_t> order; // entry positions, grouped and (row, col)-ascending
  std::vector<EntryGroup> groups;   // ascending key
};

// Observed entry store with tensorized index caches and per-factor grouping.
// Entries are canonically sorted by (row, col); immutable after construction.
template <typename Scalar>
class ObservedEntries {
public:
  ObservedEntries() = default;

  ObservedEntries(Index n, int levels, int leaf, std::vector<Index> rows,
                  std::vector<Index> cols, std::vector<Scalar> values)
      : n_(n), map_(levels, leaf), rows_(std::move(rows)), cols_(std::move(cols)),
        values_(std::move(values)) {
    detail::require(map_.dim() == n_, "ObservedEntries: n must equal leaf * 2^levels");
    detail::require(rows_.size() == cols_.size() && rows_.size() == values_.size(),
                    "ObservedEntries: triplet arrays must have equal length");
    canonicalize();
    tensorize();
    build_groupings();
  }

  Index n() const { return n_; }
  int levels() const { return map_.levels; }
  int leaf() const { return map_.leaf; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  Index row(std::size_t e) const { return rows_[e]; }
  Index col(std::size_t e) const { return cols_[e]; }
  Scalar value(std::size_t e) const { return values_[e]; }
  std::uint32_t rev_row(std::size_t e) const { return rev_row_[e]; }
  std::uint32_t rev_col(std::size_t e) const { return rev_col_[e]; }
  Index leaf_row(std::size_t e) const { return rows_[e] % map_.leaf; }
  Index leaf_col(std::size_t e) const { return cols_[e] % map_.leaf; }

  const std::vector<Index>& rows() const { return rows_; }
  const std::vector<Index>& cols() const { return cols_; }
  const std::vector<Scalar>& values() const { return values_; }

  // Grouped view for factor l in 1..L+2: S^1 groups by the leaf-inclusive
  // row fiber, S^{L+2} by the column fiber, inner factor l by its slice key.
  const FactorGrouping& groups(int factor) const {
    detail::require(factor >= 1 && factor <= map_.levels + 2,
                    "groups: factor out of range");
    return groupings_[static_cast<std::size_t>(factor - 1)];
  }

  // Sum of |t|^2 over the store (long double accumulation).
  RealOf<Scalar> squared_norm() const {
    long double acc = 0;
    for (const auto& v : values_) acc += static_cast<long double>(std::norm(v));
    return static_cast<RealOf<Scalar>>(acc);
  }

  // Same triplets under a different (levels, leaf) tensorization.
  ObservedEntries retensorized(int levels, int leaf) const {
    return ObservedEntries(n_, levels, leaf, rows_, cols_, values_);
  }

private:
  void canonicalize() {
    const std::size_t m = rows_.size();
    std::vector<std::uint32_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0u);
    std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
      return rows_[a] != rows_[b] ? rows_[a] < rows_[b] : cols_[a] < cols_[b];
    });
    std::vector<Index> r(m), c(m);
    std::vector<Scalar> v(m);
    for (std::size_t e = 0; e < m; ++e) {
      r[e] = rows_[perm[e]];
      c[e] = cols_[perm[e]];
      v[e] = values_[perm[e]];
      detail::require_range(r[e] >= 0 && r[e] < n_ && c[e] >= 0 && c[e] < n_,
                            "ObservedEntries: index out of range");
      if (e > 0 && r[e] == r[e - 1] && c[e] == c[e - 1])
        throw data_format_error("ObservedEntries: duplicate pair (" + std::to_string(r[e]) +
                                ", " + std::to_string(c[e]) + ")");
    }
    rows_.swap(r);
    cols_.swap(c);
    values_.swap(v);
  }

  void tensorize() {
    const std::size_t m = rows_.size();
    rev_row_.resize(m);
    rev_col_.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      rev_row_[e] = static_cast<std::uint32_t>(map_.binary_prefix_key(rows_[e]));
      rev_col_[e] = static_cast<std::uint32_t>(map_.binary_prefix_key(cols_[e]));
    }
  }

  std::uint64_t factor_key(int factor, std::size_t e) const {
    const int L = map_.levels;
    if (factor == 1)
      return std::uint64_t(rev_row_[e]) * map_.leaf + std::uint64_t(leaf_row(e));
    if (factor == L + 2)
      return std::uint64_t(rev_col_[e]) * map_.leaf + std::uint64_t(leaf_col(e));
    const int m = factor - 1;
    const int ibits = L - m + 1;
    const std::uint64_t imask = (std::uint64_t(1) << ibits) - 1;
    const std::uint64_t jmask = (std::uint64_t(1) << m) - 1;
    return (rev_row_[e] & imask) | ((rev_col_[e] & jmask) << ibits);
  }

  void build_groupings() {
    const int nfac = map_.levels + 2;
    const std::size_t m = rows_.size();
    groupings_.resize(static_cast<std::size_t>(nfac));
    for (int f = 1; f <= nfac; ++f) {
      auto& g = groupings_[static_cast<std::size_t>(f - 1)];
      std::vector<std::uint64_t> keys(m);
      for (std::size_t e = 0; e < m; ++e) keys[e] = factor_key(f, e);
      g.order.resize(m);
      std::iota(g.order.begin(), g.order.end(), 0u);
      // stable: entries are already (row, col)-ascending
      std::stable_sort(g.order.begin(), g.order.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
      g.groups.clear();
      for (std::uint32_t p = 0; p < m;) {
        std::uint32_t q = p;
        const std::uint64_t k = keys[g.order[p]];
        while (q < m && keys[g.order[q]] == k) ++q;
        g.groups.push_back({k, p, q});
        p = q;
      }
    }
  }

  Index n_ = 0;
  IndexMap map_{0, 1};
  std::vector<Index> rows_, cols_;
  std::vector<Scalar> values_;
  std::vector<std::uint32_t> rev_row_, rev_col_;
  std::vector<FactorGrouping> groupings_;
};

// Train/test split; the pairs must be disjoint.
template <typename Scalar>
struct EvalSplit {
  ObservedEntries<Scalar> train;
  ObservedEntries<Scalar> test; // may be empty

  void validate() const {
    if (test.empty()) return;
    detail::require(train.n() == test.n() && train.levels() == test.levels() &&
                        train.leaf() == test.leaf(),
                    "EvalSplit: train/test tensorization mismatch");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(train.size() * 2);
    for (std::size_t e = 0; e < train.size(); ++e)
      seen.insert(std::uint64_t(train.row(e)) * std::uint64_t(train.n()) +
                  std::uint64_t(train.col(e)));
    for (std::size_t e = 0; e < test.size(); ++e)
      detail::require(!seen.count(std::uint64_t(test.row(e)) * std::uint64_t(test.n()) +
                                  std::uint64_t(test.col(e))),
                      "EvalSplit: train and test sets overlap");
  }
};

// Evaluate a representation on every observed entry (parallel, deterministic).
template <typename Scalar, typename EntryFn>
std::vector<Scalar> evaluate_on(const ObservedEntries<Scalar>& obs, int threads,
                                EntryFn&& fn) {
  std::vector<Scalar> out(obs.size());
  constexpr std::size_t chunk = 1024;
  const std::size_t nchunks = (obs.size() + chunk - 1) / chunk;
  parallel_for(nchunks, threads, [&](std::size_t ci) {
    const std::size_t lo = ci * chunk;
    const std::size_t hi = std::min(lo + chunk, obs.size());
    for (std::size_t e = lo; e < hi; ++e) out[e] = fn(e);
  });
  return out;
}

template <typename Scalar>
std::vector<Scalar> reconstruct_on(const ButterflyNetwork<Scalar>& net,
                                   const ObservedEntries<Scalar>& obs, int threads = 1) {
  return evaluate_on(obs, threads,
                     [&](std::size_t e) { return reconstruct_entry(net, obs.row(e), obs.col(e)); });
}

template <typename Scalar>
std::vector<Scalar> reconstruct_on(const QttNetwork<Scalar>& net,
                                   const ObservedEntries<Scalar>& obs, int threads = 1) {
  return evaluate_on(obs, threads,
                     [&](std::size_t e) { return reconstruct_entry(net, obs.row(e), obs.col(e)); });
}

namespace detail {

template <typename Scalar>
RealOf<Scalar> relative_error_from(const std::vector<Scalar>& x,
                                   const ObservedEntries<Scalar>& obs) {
  detail::require(!obs.empty(), "relative_error: empty observed set");
  long double num = 0, den = 0;
  for (std::size_t e = 0; e < obs.size(); ++e) {
    num += static_cast<long double>(std::norm(x[e] - obs.value(e)));
    den += static_cast<long double>(std::norm(obs.value(e)));
  }
  detail::require(den > 0, "relative_error: observed entries have zero norm");
  return static_cast<RealOf<Scalar>>(std::sqrt(num / den));
}

} // namespace detail

// || P_Omega(T - X) ||_F / || P_Omega(T) ||_F
template <typename Scalar>
RealOf<Scalar> relative_error(const ButterflyNetwork<Scalar>& net,
                              const ObservedEntries<Scalar>& obs, int threads = 1) {
  return detail::relative_error_from(reconstruct_on(net, obs, threads), obs);
}

template <typename Scalar>
RealOf<Scalar> relative_error(const QttNetwork<Scalar>& net,
                              const ObservedEntries<Scalar>& obs, int threads = 1) {
  return detail::relative_error_from(reconstruct_on(net, obs, threads), obs);
}

template <typename Scalar>
RealOf<Scalar> relative_error(const LowRankPair<Scalar>& pair,
                              const ObservedEntries<Scalar>& obs, int threads = 1) {
  auto x = evaluate_on(obs, threads,
                       [&](std::size_t e) { return reconstruct_entry(pair, obs.row(e), obs.col(e)); });
  return detail::relative_error_from(x, obs);
}

template <typename Scalar>
RealOf<Scalar> relative_error(const Mat<Scalar>& dense, const ObservedEntries<Scalar>& obs) {
  detail::require(dense.rows() == obs.n() && dense.cols() == obs.n(),
                  "relative_error: dense shape mismatch");
  std::vector<Scalar> x(obs.size());
  for (std::size_t e = 0; e < obs.size(); ++e) x[e] = dense(obs.row(e), obs.col(e));
  return detail::relative_error_from(x, obs);
}

// Uniform distinct (row, col) pairs, optionally excluding a given set.
// Deterministic per seed.
inline std::vector<std::pair<Index, Index>> sample_omega(
    Index n, std::size_t count, std::uint64_t seed,
    const std::vector<std::pair<Index, Index>>& exclude = {}) {
  const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  detail::require(count + exclude.size() <= total, "sample_omega: count too large");
  std::unordered_set<std::uint64_t> taken;
  taken.reserve((count + exclude.size()) * 2);
  for (const auto& [i, j] : exclude) {
    detail::require_range(i >= 0 && i < n && j >= 0 && j < n,
                          "sample_omega: excluded pair out of range");
    taken.insert(std::uint64_t(i) * std::uint64_t(n) + std::uint64_t(j));
  }

  std::mt19937_64 eng(mix_seed(seed, 0x05a));
  std::vector<std::pair<Index, Index>> out;
  out.reserve(count);

  if (count * 2 >= total - exclude.size()) {
    // dense regime: partial Fisher-Yates over the complement
    std::vector<std::uint64_t> pool;
    pool.reserve(total - exclude.size());
    for (std::uint64_t p = 0; p < total; ++p)
      if (!taken.count(p)) pool.push_back(p);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(eng() % (pool.size() - k));
      std::swap(pool[k], pool[pick]);
      out.emplace_back(static_cast<Index>(pool[k] / std::uint64_t(n)),
                       static_cast<Index>(pool[k] % std::uint64_t(n)));
    }
    return out;
  }

  while (out.size() < count) {
    const std::uint64_t p = eng() % std::uint64_t(total);
    if (taken.insert(p).second)
      out.emplace_back(static_cast<Index>(p / std::uint64_t(n)),
                       static_cast<Index>(p % std::uint64_t(n)));
  }
  return out;
}

// Test pairs are drawn first, then train pairs excluding them.
inline std::pair<std::vector<std::pair<Index, Index>>, std::vector<std::pair<Index, Index>>>
sample_train_test(Index n, std::size_t train_count, std::size_t test_count,
                  std::uint64_t seed) {
  auto test = sample_omega(n, test_count, mix_seed(seed, 0x7e57));
  auto train = sample_omega(n, train_count, mix_seed(seed, 0x7124), test);
  return {std::move(train), std::move(test)};
}

// Gather values of a dense matrix at the given pairs into an observed store.
template <typename Scalar>
ObservedEntries<Scalar> observe_dense(const Mat<Scalar>& dense, int levels, int leaf,
                                      const std::vector<std::pair<Index, Index>>& pairs) {
  std::vector<Index> rows, cols;
  std::vector<Scalar> vals;
  rows.reserve(pairs.size());
  cols.reserve(pairs.size());
  vals.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    rows.push_back(i);
    cols.push_back(j);
    vals.push_back(dense(i, j));
  }
  return ObservedEntries<Scalar>(dense.rows(), levels, leaf, std::move(rows), std::move(cols),
                                 std::move(vals));
}

} // namespace bfc

#endif
