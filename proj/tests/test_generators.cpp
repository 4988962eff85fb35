#include "bfc/generators.hpp"

#include "support.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <numeric>
#include <set>

using namespace bfc;

TEST_CASE("green kernel entries follow the formula") {
  const Index n = 16;
  auto T = green_kernel(n);
  // first source and observer sit on top of each other: rho = 1
  const double omega = 4.0 * M_PI / 5.0;
  CHECK(std::abs(T(0, 0) - std::exp(Cplx(0.0, -omega))) < 1e-14);
  CHECK(green_default_omega(4096) == doctest::Approx(64.0 * M_PI / 5.0));
  // symmetric since the planes differ only by the unit offset
  CHECK((T - T.transpose()).norm() < 1e-13 * T.norm());
  CHECK(T.allFinite());
  CHECK_THROWS_AS(green_kernel(12), std::invalid_argument);
}

TEST_CASE("kd_reorder is a deterministic bisection") {
  // four unit-square corners, c = 1: spread tie picks x, so left pair first
  std::vector<std::array<double, 2>> corners = {
      {0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
  auto perm = kd_reorder(corners, 1);
  CHECK(perm[0] == 0);
  CHECK(perm[1] == 1);
  CHECK(perm[2] == 2);
  CHECK(perm[3] == 3);

  // points already in depth-first bisection order: identity permutation
  std::vector<std::array<double, 2>> line(8);
  for (std::size_t i = 0; i < 8; ++i) line[i] = {double(i), 0.0};
  auto id = kd_reorder(line, 2);
  for (std::size_t i = 0; i < 8; ++i) CHECK(id[i] == static_cast<Index>(i));

  // bijection on a real grid
  auto pts = green_points(64);
  auto p = kd_reorder(pts, 4);
  std::vector<Index> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 64; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);

  CHECK_THROWS_AS(kd_reorder(line, 3), std::invalid_argument);
}

TEST_CASE("reordered green matrix is consistent with the permutation") {
  auto [T, perm] = green_helmholtz(16, 4);
  auto raw = green_kernel(16);
  for (Index a = 0; a < 16; a += 5)
    for (Index b = 0; b < 16; b += 3)
      CHECK(T(a, b) == raw(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]));
}

TEST_CASE("radon matrix entries") {
  const Index n = 64;
  auto T = radon_matrix(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) CHECK(std::abs(std::abs(T(i, j)) - 1.0) < 1e-14);
  // y = 0 at 1-based j = n/2: that column is identically one
  for (Index i = 0; i < n; ++i) CHECK(std::abs(T(i, n / 2 - 1) - Cplx(1.0)) < 1e-13);
  // 1-based (n, n/2 + 1): x = 1, y = 1, c = 1/4 -> exp(2 pi i 5/4) = i
  CHECK(std::abs(T(n - 1, n / 2) - Cplx(0.0, 1.0)) < 1e-12);
  CHECK_THROWS_AS(radon_matrix(15), std::invalid_argument);
}

TEST_CASE("radon matrix is unit-modulus at n = 1024") {
  auto T = radon_matrix(1024);
  double worst = 0;
  for (Index i = 0; i < 1024; ++i)
    for (Index j = 0; j < 1024; ++j) worst = std::max(worst, std::abs(std::abs(T(i, j)) - 1.0));
  CHECK(worst < 1e-12);
}

TEST_CASE("synthetic generators are reproducible and representable") {
  auto a = synthetic_butterfly(3, 2, 2, 5);
  auto b = synthetic_butterfly(3, 2, 2, 5);
  CHECK(a == b);
  auto ones = synthetic_butterfly(2, 2, 1, 0, true);
  CHECK((ones - Mat<Cplx>::Ones(8, 8)).norm() == 0.0);

  // the generating network interpolates its own matrix
  auto net = random_butterfly(3, 2, 2, 5, butterfly_entry_scale(3, 2));
  auto obs = testing::observe_all(a, 3, 2);
  CHECK(relative_error(net, obs) < 1e-13);

  auto q1 = synthetic_qtt(3, 2, 2, 9);
  auto q2 = synthetic_qtt(3, 2, 2, 9);
  CHECK(q1 == q2);
}

TEST_CASE("reordered green matrix has complementary low rank blocks") {
  // empirical check at n = 256: every level-l x level-(L-l) block has
  // numerical rank <= 25 at tolerance 1e-3
  const Index n = 256;
  const int c = 4, L = 6;
  auto [T, perm] = green_helmholtz(n, c);
  int max_rank = 0;
  for (int l = 0; l <= L; ++l) {
    const Index rows = n >> l;
    const Index cols = n >> (L - l);
    for (Index bi = 0; bi < (Index(1) << l); ++bi)
      for (Index bj = 0; bj < (Index(1) << (L - l)); ++bj) {
        Mat<Cplx> block = T.block(bi * rows, bj * cols, rows, cols);
        Eigen::JacobiSVD<Mat<Cplx>> svd(block);
        const auto& s = svd.singularValues();
        int rank = 0;
        for (Index k = 0; k < s.size(); ++k)
          if (s(k) > 1e-3 * s(0)) ++rank;
        max_rank = std::max(max_rank, rank);
      }
  }
  MESSAGE("green n=256 max CLR block rank at 1e-3: ", max_rank);
  CHECK(max_rank <= 25);
}
