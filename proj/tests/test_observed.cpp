#include "bfc/observed.hpp"
#include "bfc/triplets.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

using namespace bfc;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "bfc_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

} // namespace

TEST_CASE("triplet files round-trip losslessly, plain and gzip") {
  TripletData data;
  std::mt19937_64 eng(3);
  std::set<std::pair<Index, Index>> used;
  std::normal_distribution<double> dist;
  while (data.rows.size() < 1000) {
    Index i = static_cast<Index>(eng() % 64), j = static_cast<Index>(eng() % 64);
    if (!used.insert({i, j}).second) continue;
    data.rows.push_back(i);
    data.cols.push_back(j);
    data.values.emplace_back(dist(eng), dist(eng));
  }
  for (const char* name : {"roundtrip.csv", "roundtrip.csv.gz"}) {
    const auto path = temp_file(name);
    save_triplets(data, path.string());
    auto back = load_triplets(path.string());
    REQUIRE(back.size() == data.size());
    CHECK(back.rows == data.rows);
    CHECK(back.cols == data.cols);
    CHECK(back.values == data.values);
  }
}

TEST_CASE("triplet parsing: format line, empty file, errors") {
  const auto path = temp_file("parse.csv");
  {
    std::ofstream out(path);
    out << "i,j,re,im\n3,5,1.0,-2.0\n";
  }
  auto t = load_triplets(path.string());
  REQUIRE(t.size() == 1);
  CHECK(t.rows[0] == 3);
  CHECK(t.cols[0] == 5);
  CHECK(t.values[0] == Cplx(1.0, -2.0));

  {
    std::ofstream out(path, std::ios::trunc);
  }
  CHECK(load_triplets(path.string()).size() == 0);

  {
    std::ofstream out(path, std::ios::trunc);
    out << "i,j,re,im\n3,5,oops,0\n";
  }
  CHECK_THROWS_WITH_AS(load_triplets(path.string()),
                       doctest::Contains("parse.csv:2"), data_format_error);

  {
    std::ofstream out(path, std::ios::trunc);
    out << "i,j,re,im\n1,1,0,0\n1,1,2,0\n";
  }
  CHECK_THROWS_AS(load_observed(path.string(), 4, 1, 2), data_format_error);
}

TEST_CASE("sample_omega covers the grid and respects exclusions") {
  auto all = sample_omega(4, 16, 123);
  std::set<std::pair<Index, Index>> pairs(all.begin(), all.end());
  CHECK(pairs.size() == 16);

  CHECK(sample_omega(4, 0, 1).empty());
  CHECK(sample_omega(7, 11, 55) == sample_omega(7, 11, 55));
  CHECK_THROWS_AS(sample_omega(4, 17, 1), std::invalid_argument);

  auto excl = sample_omega(8, 20, 9);
  auto rest = sample_omega(8, 44, 10, excl);
  std::set<std::pair<Index, Index>> seen(excl.begin(), excl.end());
  for (auto& p : rest) CHECK(seen.insert(p).second);
}

TEST_CASE("sampling is near-uniform over pairs") {
  // chi-square-ish sanity on a 4x4 grid with many draws
  std::vector<int> hits(16, 0);
  for (std::uint64_t s = 0; s < 400; ++s)
    for (auto& [i, j] : sample_omega(4, 4, 1000 + s)) ++hits[static_cast<std::size_t>(i * 4 + j)];
  for (int h : hits) CHECK(std::abs(h - 100) < 50);
}

TEST_CASE("grouping partitions the store for every factor") {
  const int L = 3, c = 2;
  auto dense = reconstruct_dense(random_butterfly(L, c, 2, 77));
  auto obs = testing::observe_sampled(dense, L, c, 100, 4);
  for (int f = 1; f <= L + 2; ++f) {
    const auto& g = obs.groups(f);
    std::size_t total = 0;
    std::set<std::uint32_t> seen;
    for (const auto& grp : g.groups) {
      total += grp.size();
      for (std::uint32_t p = grp.begin; p < grp.end; ++p) CHECK(seen.insert(g.order[p]).second);
    }
    CHECK(total == obs.size());
    // keys ascending
    for (std::size_t k = 1; k < g.groups.size(); ++k)
      CHECK(g.groups[k - 1].key < g.groups[k].key);
  }
  CHECK_THROWS_AS(obs.groups(0), std::invalid_argument);
  CHECK_THROWS_AS(obs.groups(L + 3), std::invalid_argument);
}

TEST_CASE("grouping keys follow the factor prefixes") {
  // full 2x2 grid at L = 1, c = 1: factor 1 groups are the two rows
  Mat<Cplx> dense(2, 2);
  dense << Cplx(1), Cplx(2), Cplx(3), Cplx(4);
  auto obs = testing::observe_all(dense, 1, 1);
  const auto& g1 = obs.groups(1);
  REQUIRE(g1.groups.size() == 2);
  CHECK(g1.groups[0].size() == 2);
  CHECK(g1.groups[1].size() == 2);
  for (std::uint32_t p = g1.groups[0].begin; p < g1.groups[0].end; ++p)
    CHECK(obs.row(g1.order[p]) == 0);

  // single entry: exactly one group for every factor
  auto single = ObservedEntries<Cplx>(4, 1, 2, {3}, {1}, {Cplx(5)});
  for (int f = 1; f <= 3; ++f) REQUIRE(single.groups(f).groups.size() == 1);

  // entries in one inner-factor group share the slice prefix digits
  auto net = random_butterfly(2, 2, 1, 5);
  auto big = testing::observe_all(reconstruct_dense(net), 2, 2);
  for (int f = 2; f <= 3; ++f) {
    for (const auto& grp : big.groups(f).groups)
      for (std::uint32_t p = grp.begin; p < grp.end; ++p) {
        const auto e = big.groups(f).order[p];
        CHECK(net.slice_key(f, big.rev_row(e), big.rev_col(e)) ==
              static_cast<Index>(grp.key));
      }
  }
}

TEST_CASE("iteration order is deterministic") {
  auto dense = reconstruct_dense(random_butterfly(2, 2, 1, 13));
  auto a = testing::observe_sampled(dense, 2, 2, 30, 17);
  auto b = testing::observe_sampled(dense, 2, 2, 30, 17);
  for (int f = 1; f <= 4; ++f) CHECK(a.groups(f).order == b.groups(f).order);
  // canonical (row, col) ascending
  for (std::size_t e = 1; e < a.size(); ++e) {
    const bool ordered = a.row(e - 1) < a.row(e) ||
                         (a.row(e - 1) == a.row(e) && a.col(e - 1) < a.col(e));
    CHECK(ordered);
  }
}

TEST_CASE("relative_error metric") {
  auto net = random_butterfly(2, 2, 2, 19);
  auto dense = reconstruct_dense(net);
  auto obs = testing::observe_sampled(dense, 2, 2, 40, 3);

  CHECK(relative_error(net, obs) < 1e-14);           // X matches T on Omega
  CHECK(relative_error(Mat<Cplx>(Mat<Cplx>::Zero(8, 8)), obs) == doctest::Approx(1.0)); // X = 0
  CHECK(relative_error(Mat<Cplx>(2 * dense), obs) == doctest::Approx(1.0));             // X = 2T

  // invariant under simultaneous global phase/scale
  const Cplx alpha(0.3, 0.8);
  auto obs_scaled = ObservedEntries<Cplx>(
      obs.n(), obs.levels(), obs.leaf(), obs.rows(), obs.cols(), [&] {
        std::vector<Cplx> v;
        for (std::size_t e = 0; e < obs.size(); ++e) v.push_back(alpha * obs.value(e));
        return v;
      }());
  Mat<Cplx> x = reconstruct_dense(random_butterfly(2, 2, 2, 23));
  Mat<Cplx> ax = alpha * x;
  CHECK(relative_error(x, obs) == doctest::Approx(relative_error(ax, obs_scaled)).epsilon(1e-12));

  auto zeros = ObservedEntries<Cplx>(4, 0, 4, {0, 1}, {1, 2}, {Cplx(0), Cplx(0)});
  CHECK_THROWS_AS(relative_error(Mat<Cplx>(Mat<Cplx>::Zero(4, 4)), zeros),
                  std::invalid_argument);
}

TEST_CASE("eval split rejects overlap and tensorization mismatch") {
  EvalSplit<Cplx> split;
  split.train = ObservedEntries<Cplx>(4, 1, 2, {0, 1}, {0, 1}, {Cplx(1), Cplx(2)});
  split.test = ObservedEntries<Cplx>(4, 1, 2, {2}, {3}, {Cplx(3)});
  split.validate();
  split.test = ObservedEntries<Cplx>(4, 1, 2, {1}, {1}, {Cplx(3)});
  CHECK_THROWS_AS(split.validate(), std::invalid_argument);
}

TEST_CASE("retensorized stores keep the triplets") {
  auto dense = reconstruct_dense(random_butterfly(2, 2, 1, 29));
  auto obs = testing::observe_sampled(dense, 2, 2, 20, 5);
  auto flat = obs.retensorized(0, static_cast<int>(obs.n()));
  CHECK(flat.levels() == 0);
  CHECK(flat.size() == obs.size());
  CHECK(flat.rows() == obs.rows());
  CHECK(flat.values() == obs.values());
}
