#include "bfc/adam.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace bfc;

namespace {

EvalSplit<Cplx> split_of(ObservedEntries<Cplx> train) {
  EvalSplit<Cplx> s;
  s.train = std::move(train);
  return s;
}

// objective phi = 1/2 sum over observed |x - t|^2
double objective_at(const ButterflyNetwork<Cplx>& net, const ObservedEntries<Cplx>& obs) {
  auto z = residual_on_omega(net, obs);
  long double acc = 0;
  for (const auto& v : z) acc += std::norm(v);
  return 0.5 * double(acc);
}

} // namespace

TEST_CASE("residual_on_omega matches the dense difference") {
  auto net = random_butterfly(2, 2, 2, 4);
  auto dense = reconstruct_dense(net);
  auto obs = testing::observe_sampled(dense, 2, 2, 30, 6);
  auto z = residual_on_omega(net, obs);
  for (const auto& v : z) CHECK(std::abs(v) < 1e-13);

  auto other = reconstruct_dense(random_butterfly(2, 2, 2, 5));
  auto obs2 = testing::observe_sampled(other, 2, 2, 30, 6);
  auto zero = butterfly_like<Cplx>(2, 2, 2);
  auto z2 = residual_on_omega(zero, obs2);
  for (std::size_t e = 0; e < obs2.size(); ++e)
    CHECK(std::abs(z2[e] + obs2.value(e)) < 1e-14);

  auto z3 = residual_on_omega(net, obs2);
  for (std::size_t e = 0; e < obs2.size(); ++e)
    CHECK(std::abs(z3[e] - (dense(obs2.row(e), obs2.col(e)) - obs2.value(e))) <=
          1e-12 * std::abs(z3[e]));
}

TEST_CASE("gradients vanish at an interpolant and off observed slices") {
  auto net = random_butterfly(2, 2, 2, 8);
  auto dense = reconstruct_dense(net);
  auto obs = testing::observe_sampled(dense, 2, 2, 25, 9);
  auto g = butterfly_gradients(net, obs);
  for (const auto& core : g.cores)
    for (const auto& slice : core) CHECK(slice.norm() < 1e-12);

  // locality: a slice no observed entry maps to keeps a zero gradient
  auto obs1 = ObservedEntries<Cplx>(8, 2, 2, {1}, {2}, {Cplx(3, 1)});
  auto g1 = butterfly_gradients(net, obs1);
  for (int f = 1; f <= net.factor_count(); ++f) {
    const std::size_t e = 0;
    Index hot;
    if (f == 1)
      hot = static_cast<Index>(obs1.rev_row(e));
    else if (f == net.factor_count())
      hot = static_cast<Index>(obs1.rev_col(e));
    else
      hot = net.slice_key(f, obs1.rev_row(e), obs1.rev_col(e));
    const auto& core = g1.cores[static_cast<std::size_t>(f - 1)];
    for (std::size_t k = 0; k < core.size(); ++k) {
      if (static_cast<Index>(k) == hot) continue;
      if (f == 1 || f == net.factor_count()) continue; // fibers share slices
      CHECK(core[k].norm() == 0.0);
    }
    CHECK(core[static_cast<std::size_t>(hot)].norm() > 0.0);
  }
}

TEST_CASE("hand-computed L = 0 gradient") {
  // T = [[1,0],[0,0]], S1 = S2 = [[1],[1]]: X = ones, Z = [[0,1],[1,1]]
  Mat<Cplx> T = Mat<Cplx>::Zero(2, 2);
  T(0, 0) = Cplx(1);
  auto obs = testing::observe_all(T, 0, 2);
  auto net = ones_butterfly(0, 2, 1);
  auto g = butterfly_gradients(net, obs);
  CHECK(std::abs(g.cores[0][0](0, 0) - Cplx(1)) < 1e-14);
  CHECK(std::abs(g.cores[0][0](1, 0) - Cplx(2)) < 1e-14);
  CHECK(std::abs(g.cores[1][0](0, 0) - Cplx(1)) < 1e-14);
  CHECK(std::abs(g.cores[1][0](1, 0) - Cplx(2)) < 1e-14);
}

TEST_CASE("finite differences confirm every core gradient") {
  // directional derivative d/dh phi(S + h D) = Re <g, D>
  for (int L : {0, 1, 2})
    for (int r : {1, 2}) {
      const int c = 2;
      auto data = reconstruct_dense(random_butterfly(L, c, r + 1, 50 + L, 0.8));
      auto obs = testing::observe_sampled(
          data, L, c, static_cast<std::size_t>(data.rows() * data.rows() / 2), 60 + r);
      auto net = random_butterfly(L, c, r, 70 + 10 * L + r, 0.7);
      auto g = butterfly_gradients(net, obs);

      std::mt19937_64 eng(90 + L + r);
      const double h = 1e-6;
      long double inner = 0;
      auto plus = net, minus = net;
      for (std::size_t f = 0; f < net.cores.size(); ++f)
        for (std::size_t k = 0; k < net.cores[f].size(); ++k) {
          Mat<Cplx> dir = gaussian_matrix<Cplx>(net.cores[f][k].rows(),
                                                net.cores[f][k].cols(), eng);
          plus.cores[f][k] += h * dir;
          minus.cores[f][k] -= h * dir;
          inner += (g.cores[f][k].array() * dir.array().conjugate()).sum().real();
        }
      const double fd = (objective_at(plus, obs) - objective_at(minus, obs)) / (2 * h);
      CHECK(std::abs(fd - double(inner)) <= 1e-5 * std::abs(fd));
    }
}

TEST_CASE("adam_update follows the moment recursions") {
  AdamOptions opt;
  Mat<Cplx> s = Mat<Cplx>::Ones(2, 2);
  Mat<Cplx> g = Mat<Cplx>::Zero(2, 2);
  Mat<Cplx> m = Mat<Cplx>::Zero(2, 2);
  Mat<double> v = Mat<double>::Zero(2, 2);
  auto s0 = s;
  adam_update(s, g, m, v, 1, opt);
  CHECK((s - s0).norm() == 0.0); // zero gradient is the identity

  // t = 1 from zero state: step is -alpha * g / (|g| + sigma)
  g(0, 0) = Cplx(2.0);
  g(1, 1) = Cplx(-0.5);
  s = s0;
  m.setZero();
  v.setZero();
  adam_update(s, g, m, v, 1, opt);
  CHECK(std::abs(s(0, 0) - (Cplx(1) - opt.alpha * 2.0 / (2.0 + opt.sigma))) < 1e-15);
  CHECK(std::abs(s(1, 1) - (Cplx(1) + opt.alpha * 0.5 / (0.5 + opt.sigma))) < 1e-15);

  // beta1 = beta2 = 0 reduces to the same expression at any t
  AdamOptions nodecay;
  nodecay.beta1 = 0;
  nodecay.beta2 = 0;
  s = s0;
  m.setZero();
  v.setZero();
  adam_update(s, g, m, v, 7, nodecay);
  CHECK(std::abs(s(0, 0) - (Cplx(1) - nodecay.alpha * 2.0 / (2.0 + nodecay.sigma))) < 1e-15);

  CHECK_THROWS_AS(adam_update(s, g, m, v, 0, opt), std::invalid_argument);
}

TEST_CASE("adam_butterfly descends on exactly representable data") {
  const int L = 2, c = 2, r = 2;
  auto truth = random_butterfly(L, c, r, 3, butterfly_entry_scale(L, r));
  auto dense = reconstruct_dense(truth);
  auto obs = testing::observe_sampled(dense, L, c, 40, 2);

  auto net = perturbed(truth, 0.05, 8);
  const double initial = relative_error(net, obs);
  AdamConfig cfg;
  cfg.max_iters = 50;
  cfg.tol = 1e-12;
  auto report = adam_butterfly(net, split_of(std::move(obs)), cfg);
  CHECK(report.final_train() < initial);
  CHECK(report.records.size() == 50);
}

TEST_CASE("adam with zero learning rate holds everything constant") {
  auto net = random_butterfly(1, 2, 1, 5);
  auto before = net;
  auto dense = reconstruct_dense(random_butterfly(1, 2, 1, 6));
  auto obs = testing::observe_all(dense, 1, 2);
  AdamConfig cfg;
  cfg.max_iters = 3;
  cfg.hyper.alpha = 0.0;
  auto report = adam_butterfly(net, split_of(std::move(obs)), cfg);
  for (std::size_t f = 0; f < net.cores.size(); ++f)
    for (std::size_t k = 0; k < net.cores[f].size(); ++k)
      CHECK(net.cores[f][k] == before.cores[f][k]);
  CHECK(report.records[0].train_err == report.records[2].train_err);
}

TEST_CASE("adam runs are reproducible") {
  auto dense = reconstruct_dense(random_butterfly(2, 2, 2, 13, 0.6));
  auto obs = testing::observe_sampled(dense, 2, 2, 30, 4);
  AdamConfig cfg;
  cfg.max_iters = 5;
  std::string fp;
  for (int run = 0; run < 2; ++run) {
    auto net = random_butterfly(2, 2, 2, 15, 0.5);
    auto report = adam_butterfly(net, split_of(obs), cfg);
    if (run == 0)
      fp = report.fingerprint();
    else
      CHECK(fp == report.fingerprint());
  }
}

TEST_CASE("the divergence guard aborts exploding runs") {
  auto dense = reconstruct_dense(random_butterfly(1, 2, 1, 23, 1e-3));
  auto obs = testing::observe_all(dense, 1, 2);
  auto net = random_butterfly(1, 2, 1, 24, 1.0);
  AdamConfig cfg;
  cfg.max_iters = 400;
  cfg.hyper.alpha = 40.0; // absurd step size
  cfg.divergence_factor = 10.0;
  auto report = adam_butterfly(net, split_of(std::move(obs)), cfg);
  CHECK(report.termination == "diverged");
}
