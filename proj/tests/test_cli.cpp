#include "bfc/bfc.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bfc;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / "bfc_test_cli";
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BFC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string masked_report(const fs::path& dir) {
  nlohmann::json j;
  std::ifstream in(dir / "summary.json");
  in >> j;
  j.erase("total_seconds");
  j.erase("config"); // output paths and worker counts legitimately differ
  std::string out = j.dump();
  std::ifstream lines(dir / "report.jsonl");
  std::string line;
  while (std::getline(lines, line)) {
    auto r = nlohmann::json::parse(line);
    r.erase("seconds");
    out += "\n" + r.dump();
  }
  return out;
}

} // namespace

TEST_CASE("generate radon emits unit-modulus triplets deterministically") {
  const auto dir = work_dir();
  const auto out = dir / "radon.csv";
  REQUIRE(run_cli("generate --kind radon -n 16 --out " + out.string()) == 0);
  auto t = load_triplets(out.string());
  REQUIRE(t.size() == 256);
  for (const auto& v : t.values) CHECK(std::abs(std::abs(v) - 1.0) < 1e-13);

  const auto out2 = dir / "radon2.csv";
  REQUIRE(run_cli("generate --kind radon -n 16 --out " + out2.string()) == 0);
  CHECK(slurp(out) == slurp(out2)); // byte-identical
}

TEST_CASE("generate green emits a symmetric matrix") {
  const auto dir = work_dir();
  const auto out = dir / "green.csv";
  REQUIRE(run_cli("generate --kind green -n 16 --leaf 4 --out " + out.string()) == 0);
  auto T = Mat<Cplx>::Zero(16, 16).eval();
  auto t = load_triplets(out.string());
  for (std::size_t e = 0; e < t.size(); ++e) T(t.rows[e], t.cols[e]) = t.values[e];
  CHECK((T - T.transpose()).norm() < 1e-12 * T.norm());
}

TEST_CASE("complete recovers synthetic butterfly data end to end") {
  const auto dir = work_dir();
  const auto train = dir / "train.csv";
  // n = 256, |Omega| = 30 n log2 n = 61440
  REQUIRE(run_cli("generate --kind synthetic-butterfly --levels 6 --leaf 4 --rank 2 --seed 5"
                  " --train-count 61440 --train-out " +
                  train.string()) == 0);
  const auto rundir = dir / "run";
  CHECK(run_cli("complete --train " + train.string() +
                " --levels 6 --leaf 4 --rank 2 --max-iters 20 --tol 1e-3 --seed 1 --out " +
                rundir.string()) == 0); // exit 0 iff converged

  // eval on the written network matches the reported train error closely
  const auto err_out = dir / "eval.txt";
  const std::string cmd = std::string(BFC_CLI_PATH) + " eval --network " +
                          (rundir / "network.json").string() + " --data " + train.string() +
                          " > " + err_out.string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  const double err = std::stod(slurp(err_out));
  nlohmann::json summary;
  {
    std::ifstream in(rundir / "summary.json");
    in >> summary;
  }
  CHECK(err == doctest::Approx(double(summary["final_train_err"])).epsilon(1e-12));
  CHECK(err < 1e-3);
}

TEST_CASE("usage and data errors map to the documented exit codes") {
  const auto dir = work_dir();
  const auto train = dir / "small.csv";
  REQUIRE(run_cli("generate --kind synthetic-butterfly --levels 2 --leaf 2 --rank 1 --seed 2"
                  " --train-count 30 --train-out " +
                  train.string()) == 0);
  CHECK(run_cli("complete --train " + train.string() +
                " --levels 2 --leaf 2 --rank 1 --max-iters 0 --out " +
                (dir / "x").string()) == 64);
  CHECK(run_cli("complete --train " + (dir / "missing.csv").string() +
                " --levels 2 --leaf 2 --rank 1 --out " + (dir / "x").string()) == 65);
  CHECK(run_cli("complete --no-such-flag") == 64);
  CHECK(run_cli("eval --network " + (dir / "nonet.json").string() + " --data " +
                train.string()) == 65);
}

TEST_CASE("reruns with one config produce identical reports") {
  const auto dir = work_dir();
  const auto train = dir / "rr.csv";
  REQUIRE(run_cli("generate --kind synthetic-butterfly --levels 4 --leaf 4 --rank 2 --seed 3"
                  " --train-count 1600 --train-out " +
                  train.string()) == 0);
  const std::string base = "complete --train " + train.string() +
                           " --levels 4 --leaf 4 --rank 2 --max-iters 4 --tol 1e-9 --seed 7"
                           " --record-objective --out ";
  run_cli(base + (dir / "a").string());
  run_cli(base + (dir / "b").string());
  CHECK(masked_report(dir / "a") == masked_report(dir / "b"));
  // thread count does not change the numbers
  run_cli(base + (dir / "c").string() + " --threads 4");
  CHECK(masked_report(dir / "a") == masked_report(dir / "c"));
}

TEST_CASE("config files feed flags with command-line override") {
  const auto dir = work_dir();
  const auto train = dir / "cfg_train.csv";
  REQUIRE(run_cli("generate --kind synthetic-butterfly --levels 2 --leaf 4 --rank 1 --seed 9"
                  " --train-count 150 --train-out " +
                  train.string()) == 0);
  const auto cfg = dir / "run.json";
  {
    std::ofstream out(cfg);
    out << nlohmann::json{{"train", train.string()},
                          {"levels", 2},
                          {"leaf", 4},
                          {"rank", 1},
                          {"max-iters", 3},
                          {"tol", 1e-3},
                          {"out", (dir / "cfg_run").string()}}
               .dump();
  }
  CHECK(run_cli("complete --config " + cfg.string() + " --max-iters 5 --tol 1e-12") == 2);
  nlohmann::json summary;
  {
    std::ifstream in(dir / "cfg_run" / "summary.json");
    in >> summary;
  }
  CHECK(int(summary["iterations"]) == 5); // command line wins

  {
    std::ofstream out(cfg);
    out << nlohmann::json{{"no-such-key", 1}}.dump();
  }
  CHECK(run_cli("complete --config " + cfg.string()) == 64); // unknown keys rejected
}

TEST_CASE("matvec applies saved networks to vector files") {
  const auto dir = work_dir();
  auto net = random_butterfly(3, 2, 2, 77);
  const auto npath = dir / "net.json";
  save_network(net, npath.string());

  const Index n = net.dim();
  std::mt19937_64 eng(5);
  Vec<Cplx> v = gaussian_matrix<Cplx>(n, 1, eng);
  TripletData vt;
  for (Index i = 0; i < n; ++i) {
    vt.rows.push_back(i);
    vt.cols.push_back(0);
    vt.values.push_back(v(i));
  }
  const auto vpath = dir / "v.csv";
  save_triplets(vt, vpath.string());
  const auto upath = dir / "u.csv";
  REQUIRE(run_cli("matvec --network " + npath.string() + " --in " + vpath.string() + " --out " +
                  upath.string()) == 0);
  auto ut = load_triplets(upath.string());
  Vec<Cplx> u = Vec<Cplx>::Zero(n);
  for (std::size_t e = 0; e < ut.size(); ++e) u(ut.rows[e]) = ut.values[e];
  Vec<Cplx> expect = reconstruct_dense(net) * v;
  CHECK((u - expect).norm() < 1e-12 * expect.norm());

  // zero vector stays zero, and a second roundtrip reproduces the file
  TripletData zt;
  for (Index i = 0; i < n; ++i) {
    zt.rows.push_back(i);
    zt.cols.push_back(0);
    zt.values.push_back(Cplx(0));
  }
  save_triplets(zt, vpath.string());
  REQUIRE(run_cli("matvec --network " + npath.string() + " --in " + vpath.string() + " --out " +
                  upath.string()) == 0);
  auto zout = load_triplets(upath.string());
  for (const auto& z : zout.values) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("eval reports zero on the generating network and one on a zero network") {
  const auto dir = work_dir();
  auto net = random_butterfly(2, 2, 2, 55);
  const auto npath = dir / "gen_net.json";
  save_network(net, npath.string());
  const auto data = dir / "gen_net_data.csv";
  REQUIRE(run_cli("convert --in " + npath.string() + " --to triplets --out " + data.string()) ==
          0);

  auto eval_err = [&](const fs::path& network) {
    const auto out = dir / "eval_out.txt";
    const std::string cmd = std::string(BFC_CLI_PATH) + " eval --network " + network.string() +
                            " --data " + data.string() + " > " + out.string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    return std::stod(slurp(out));
  };
  CHECK(eval_err(npath) <= 1e-12);

  auto zero = random_butterfly(2, 2, 2, 1, 0.0);
  const auto zpath = dir / "zero_net.json";
  save_network(zero, zpath.string());
  CHECK(eval_err(zpath) == doctest::Approx(1.0));
}

TEST_CASE("convert turns lowrank containers into butterfly networks") {
  const auto dir = work_dir();
  std::mt19937_64 eng(8);
  LowRankPair<Cplx> pair{gaussian_matrix<Cplx>(16, 1, eng), gaussian_matrix<Cplx>(16, 1, eng)};
  const auto lpath = dir / "pair.json";
  save_network(pair, lpath.string());
  const auto bpath = dir / "bf.json";
  REQUIRE(run_cli("convert --in " + lpath.string() + " --to butterfly --levels 2 --rank 1"
                  " --oversample 2 --out " +
                  bpath.string()) == 0);
  auto net = std::get<ButterflyNetwork<Cplx>>(load_network(bpath.string()));
  CHECK(testing::rel_frob_error(reconstruct_dense(net), reconstruct_dense(pair)) < 1e-10);

  const auto tpath = dir / "dump.csv";
  REQUIRE(run_cli("convert --in " + bpath.string() + " --to triplets --out " + tpath.string()) ==
          0);
  CHECK(load_triplets(tpath.string()).size() == 256);
}
