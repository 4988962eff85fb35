// bfc: generate, sample, complete, convert, evaluate and apply tensorized
// butterfly / QTT / low-rank matrix completions.

#include "bfc/bfc.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bfc;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitNotConverged = 2;
constexpr int kExitUsage = 64;
constexpr int kExitDataFormat = 65;
constexpr int kExitInternal = 70;

struct Options {
  std::string kind, out, train, test, matrix, network, in, to, algo = "als",
              format = "butterfly", init_network;
  std::string train_out, test_out;
  std::string config_path; // consumed before parsing; registered for help only
  Index n = 0;
  int levels = -1, leaf = -1, rank = -1;
  std::optional<int> init_rank;
  int init_iters = 10;
  std::optional<int> oversample;
  int max_iters = 20;
  double tol = 1e-3;
  std::optional<double> reg;
  double omega = -1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t count = 0, test_count = 0, train_count = 0;
  bool ones = false, csv = false, record_objective = false;
  double alpha = 1e-3, beta1 = 0.9, beta2 = 0.999, sigma = 1e-8;
};

json config_echo(const CLI::App* cmd) {
  json j;
  j["command"] = cmd->get_name();
  for (const auto* opt : cmd->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    if (!opt->count() && opt->get_default_str().empty()) continue;
    j[opt->get_name()] = opt->count() ? json(opt->results().back())
                                      : json(opt->get_default_str());
  }
  return j;
}

// ---------------------------------------------------------------------------
// small file helpers

Mat<Cplx> dense_from_triplets(const TripletData& t, Index n) {
  Mat<Cplx> out = Mat<Cplx>::Zero(n, n);
  for (std::size_t e = 0; e < t.size(); ++e) {
    if (t.rows[e] >= n || t.cols[e] >= n)
      throw data_format_error("triplet index out of range for n = " + std::to_string(n));
    out(t.rows[e], t.cols[e]) = t.values[e];
  }
  return out;
}

void dump_dense_triplets(const Mat<Cplx>& T, const std::string& path) {
  TripletData data;
  const Index n = T.rows();
  data.rows.reserve(static_cast<std::size_t>(n) * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < T.cols(); ++j) {
      data.rows.push_back(i);
      data.cols.push_back(j);
      data.values.push_back(T(i, j));
    }
  save_triplets(data, path);
}

Vec<Cplx> load_vector(const std::string& path, Index n) {
  auto t = load_triplets(path);
  Vec<Cplx> v = Vec<Cplx>::Zero(n);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (std::size_t e = 0; e < t.size(); ++e) {
    if (t.cols[e] != 0) throw data_format_error(path + ": vector entries must use j = 0");
    const Index i = t.rows[e];
    if (i >= n) throw data_format_error(path + ": vector length mismatch");
    if (seen[static_cast<std::size_t>(i)])
      throw data_format_error(path + ": duplicate vector index " + std::to_string(i));
    seen[static_cast<std::size_t>(i)] = true;
    v(i) = t.values[e];
  }
  for (Index i = 0; i < n; ++i)
    if (!seen[static_cast<std::size_t>(i)])
      throw data_format_error(path + ": missing vector index " + std::to_string(i));
  return v;
}

void save_vector(const Vec<Cplx>& v, const std::string& path) {
  TripletData data;
  for (Index i = 0; i < v.size(); ++i) {
    data.rows.push_back(i);
    data.cols.push_back(0);
    data.values.push_back(v(i));
  }
  save_triplets(data, path);
}

void write_report_files(const ConvergenceReport& report, const json& echo,
                        const fs::path& outdir, bool csv) {
  fs::create_directories(outdir);
  {
    std::ofstream out(outdir / "report.jsonl");
    report.write_jsonl(out);
  }
  {
    std::ofstream out(outdir / "summary.json");
    out << report.summary(echo).dump(2) << "\n";
  }
  if (csv) {
    std::ofstream out(outdir / "report.csv");
    out << "iteration,train,test,seconds\n";
    char buf[160];
    for (const auto& r : report.records) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.iter, r.train_err,
                    r.test_err, r.seconds);
      out << buf;
    }
  }
}

// ---------------------------------------------------------------------------
// commands

int cmd_generate(const Options& opt, const CLI::App* cmd) {
  Mat<Cplx> T;
  Index n = opt.n;
  if (opt.kind == "green") {
    if (n <= 0 || opt.leaf <= 0) throw std::invalid_argument("generate green: need -n and --leaf");
    T = green_helmholtz(n, opt.leaf, opt.omega, opt.threads).matrix;
  } else if (opt.kind == "radon") {
    if (n <= 0) throw std::invalid_argument("generate radon: need -n");
    T = radon_matrix(n, opt.threads);
  } else if (opt.kind == "synthetic-butterfly") {
    if (opt.levels < 0 || opt.leaf <= 0 || opt.rank <= 0)
      throw std::invalid_argument("generate synthetic-butterfly: need --levels, --leaf, --rank");
    T = synthetic_butterfly(opt.levels, opt.leaf, opt.rank, opt.seed, opt.ones, opt.threads);
    n = T.rows();
  } else if (opt.kind == "synthetic-qtt") {
    if (opt.levels < 1 || opt.leaf <= 0 || opt.rank <= 0)
      throw std::invalid_argument("generate synthetic-qtt: need --levels, --leaf, --rank");
    T = synthetic_qtt(opt.levels, opt.leaf, opt.rank, opt.seed, opt.threads);
    n = T.rows();
  } else {
    throw std::invalid_argument("generate: unknown --kind " + opt.kind);
  }

  if (!opt.out.empty()) dump_dense_triplets(T, opt.out);
  if (opt.train_count > 0 || opt.test_count > 0) {
    if (opt.train_out.empty())
      throw std::invalid_argument("generate: --train-count needs --train-out");
    auto [train, test] = sample_train_test(n, opt.train_count, opt.test_count, opt.seed);
    TripletData td;
    for (auto& [i, j] : train) {
      td.rows.push_back(i);
      td.cols.push_back(j);
      td.values.push_back(T(i, j));
    }
    save_triplets(td, opt.train_out);
    if (opt.test_count > 0) {
      if (opt.test_out.empty())
        throw std::invalid_argument("generate: --test-count needs --test-out");
      TripletData ed;
      for (auto& [i, j] : test) {
        ed.rows.push_back(i);
        ed.cols.push_back(j);
        ed.values.push_back(T(i, j));
      }
      save_triplets(ed, opt.test_out);
    }
  }
  json j{{"command", "generate"}, {"n", n}, {"config", config_echo(cmd)}};
  std::cout << j.dump() << "\n";
  return kExitConverged;
}

int cmd_sample(const Options& opt, const CLI::App* cmd) {
  if (opt.n <= 0 || opt.matrix.empty() || opt.out.empty())
    throw std::invalid_argument("sample: need --matrix, -n and --out");
  auto t = load_triplets(opt.matrix);
  std::unordered_map<std::uint64_t, Cplx> lookup;
  lookup.reserve(t.size() * 2);
  for (std::size_t e = 0; e < t.size(); ++e)
    lookup[std::uint64_t(t.rows[e]) * std::uint64_t(opt.n) + std::uint64_t(t.cols[e])] =
        t.values[e];

  auto [train, test] = sample_train_test(opt.n, opt.count, opt.test_count, opt.seed);
  auto gather = [&](const std::vector<std::pair<Index, Index>>& pairs) {
    TripletData out;
    for (auto& [i, j] : pairs) {
      auto it = lookup.find(std::uint64_t(i) * std::uint64_t(opt.n) + std::uint64_t(j));
      if (it == lookup.end())
        throw data_format_error("sample: source matrix is missing entry (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
      out.rows.push_back(i);
      out.cols.push_back(j);
      out.values.push_back(it->second);
    }
    return out;
  };
  save_triplets(gather(train), opt.out);
  if (opt.test_count > 0) {
    if (opt.test_out.empty()) throw std::invalid_argument("sample: --test-count needs --test-out");
    save_triplets(gather(test), opt.test_out);
  }
  json j{{"command", "sample"}, {"train", opt.count}, {"test", opt.test_count},
         {"config", config_echo(cmd)}};
  std::cout << j.dump() << "\n";
  return kExitConverged;
}

int cmd_complete(const Options& opt, const CLI::App* cmd) {
  if (opt.train.empty() || opt.out.empty())
    throw std::invalid_argument("complete: need --train and --out");
  if (opt.levels < 0 || opt.leaf <= 0 || opt.rank <= 0)
    throw std::invalid_argument("complete: need --levels, --leaf and --rank");
  const Index n = Index(opt.leaf) << opt.levels;

  const int obs_levels = (opt.format == "lowrank") ? 0 : opt.levels;
  const int obs_leaf = (opt.format == "lowrank") ? static_cast<int>(n) : opt.leaf;
  EvalSplit<Cplx> split;
  split.train = load_observed(opt.train, n, obs_levels, obs_leaf);
  if (!opt.test.empty()) split.test = load_observed(opt.test, n, obs_levels, obs_leaf);

  AlsConfig als;
  als.max_iters = opt.max_iters;
  als.tol = opt.tol;
  als.reg = opt.reg;
  als.record_objective = opt.record_objective;
  als.threads = opt.threads;
  AdamConfig adam;
  adam.max_iters = opt.max_iters;
  adam.tol = opt.tol;
  adam.hyper = {opt.alpha, opt.beta1, opt.beta2, opt.sigma};
  adam.threads = opt.threads;

  const fs::path outdir(opt.out);
  fs::create_directories(outdir);
  ConvergenceReport report;
  json extra;

  if (opt.format == "butterfly") {
    ButterflyNetwork<Cplx> net;
    if (!opt.init_network.empty()) {
      net = std::get<ButterflyNetwork<Cplx>>(load_network(opt.init_network));
      detail::require(net.levels == opt.levels && net.leaf == opt.leaf && net.rank == opt.rank,
                      "complete: --init-network dimensions disagree with flags");
    } else if (opt.levels % 2 == 0) {
      InitialGuessConfig icfg;
      icfg.lowrank_iters = opt.init_iters;
      icfg.init_rank = opt.init_rank;
      icfg.oversampling = opt.oversample;
      icfg.reg = opt.reg;
      icfg.seed = opt.seed;
      icfg.threads = opt.threads;
      auto guess = generate_initial_guess(split.train, opt.levels, opt.leaf, opt.rank, icfg);
      extra["initial_guess"] = {{"lowrank_train_err", guess.lowrank_train_error},
                                {"init_rank", guess.init_rank_used},
                                {"oversampling", guess.oversampling_used},
                                {"lowrank_iters", opt.init_iters}};
      net = std::move(guess.net);
    } else {
      // the randomized converter needs an even level count; fall back to a
      // data-scaled random start
      const double rms =
          std::sqrt(double(split.train.squared_norm()) / double(split.train.size()));
      const double scale = butterfly_entry_scale(opt.levels, opt.rank) *
                           std::pow(rms, 1.0 / double(opt.levels + 2));
      net = random_butterfly(opt.levels, opt.leaf, opt.rank, opt.seed, scale);
      extra["initial_guess"] = {{"random", true}};
    }
    report = (opt.algo == "adam") ? adam_butterfly(net, split, adam)
                                  : als_butterfly(net, split, als);
    save_network(net, (outdir / "network.json").string());
  } else if (opt.format == "lowrank") {
    const double scale = std::sqrt(double(split.train.squared_norm())) /
                         std::sqrt(double(split.train.size()) * double(opt.rank));
    std::mt19937_64 eng(mix_seed(opt.seed, 0xc11));
    LowRankPair<Cplx> pair{gaussian_matrix<Cplx>(n, opt.rank, eng, scale),
                           gaussian_matrix<Cplx>(n, opt.rank, eng, scale)};
    if (opt.algo == "adam") {
      ButterflyNetwork<Cplx> net;
      net.levels = 0;
      net.leaf = static_cast<int>(n);
      net.rank = opt.rank;
      net.cores = {{pair.A}, {pair.B.conjugate()}};
      report = adam_butterfly(net, split, adam);
      pair.A = net.cores[0][0];
      pair.B = net.cores[1][0].conjugate();
    } else {
      auto result = als_lowrank(std::move(pair), split, als);
      report = std::move(result.report);
      pair = std::move(result.pair);
    }
    save_network(pair, (outdir / "network.json").string());
  } else if (opt.format == "qtt") {
    if (opt.algo == "adam")
      throw std::invalid_argument("complete: --algo adam supports butterfly and lowrank only");
    detail::require(opt.levels >= 1, "complete qtt: --levels must be >= 1");
    const double rms =
        std::sqrt(double(split.train.squared_norm()) / double(split.train.size()));
    const double scale = qtt_entry_scale(opt.levels, opt.rank) *
                         std::pow(rms, 1.0 / double(opt.levels + 1));
    auto net = random_qtt(opt.levels, opt.leaf, opt.rank, opt.seed, scale);
    report = als_qtt(net, split, als);
    save_network(net, (outdir / "network.json").string());
  } else {
    throw std::invalid_argument("complete: unknown --format " + opt.format);
  }

  json echo = config_echo(cmd);
  if (!extra.is_null()) echo["derived"] = extra;
  write_report_files(report, echo, outdir, opt.csv);
  std::cout << report.summary(echo).dump() << "\n";
  return report.converged() ? kExitConverged : kExitNotConverged;
}

int cmd_convert(const Options& opt, const CLI::App* cmd) {
  if (opt.in.empty() || opt.out.empty() || opt.to.empty())
    throw std::invalid_argument("convert: need --in, --out and --to");
  auto loaded = load_network(opt.in);

  if (opt.to == "butterfly") {
    auto* pair = std::get_if<LowRankPair<Cplx>>(&loaded);
    if (!pair) throw data_format_error("convert: --to butterfly expects a lowrank container");
    if (opt.levels < 0 || opt.rank <= 0)
      throw std::invalid_argument("convert: --to butterfly needs --levels and --rank");
    const int c = static_cast<int>(pair->dim() >> opt.levels);
    (void)c;
    const int p = opt.oversample ? *opt.oversample : std::min(10, opt.rank);
    auto net = lr_to_butterfly(*pair, opt.levels, opt.rank, p, opt.seed);
    save_network(net, opt.out);
  } else if (opt.to == "triplets") {
    Mat<Cplx> dense = std::visit(
        [&](const auto& net) { return reconstruct_dense(net); }, loaded);
    dump_dense_triplets(dense, opt.out);
  } else {
    throw std::invalid_argument("convert: unknown target format " + opt.to);
  }
  json j{{"command", "convert"}, {"config", config_echo(cmd)}};
  std::cout << j.dump() << "\n";
  return kExitConverged;
}

int cmd_eval(const Options& opt, const CLI::App*) {
  if (opt.network.empty() || opt.in.empty())
    throw std::invalid_argument("eval: need --network and --data");
  auto loaded = load_network(opt.network);
  const double err = std::visit(
      [&](const auto& net) -> double {
        using T = std::decay_t<decltype(net)>;
        Index n;
        int levels, leaf;
        if constexpr (std::is_same_v<T, LowRankPair<Cplx>>) {
          n = net.dim();
          levels = 0;
          leaf = static_cast<int>(n);
        } else {
          n = net.dim();
          levels = net.levels;
          leaf = net.leaf;
        }
        auto obs = load_observed(opt.in, n, levels, leaf);
        return double(relative_error(net, obs, opt.threads));
      },
      loaded);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", err);
  std::cout << buf << "\n";
  return kExitConverged;
}

int cmd_matvec(const Options& opt, const CLI::App*) {
  if (opt.network.empty() || opt.in.empty() || opt.out.empty())
    throw std::invalid_argument("matvec: need --network, --in and --out");
  auto loaded = load_network(opt.network);
  Vec<Cplx> u;
  if (auto* net = std::get_if<ButterflyNetwork<Cplx>>(&loaded)) {
    u = matvec(*net, load_vector(opt.in, net->dim()));
  } else if (auto* pair = std::get_if<LowRankPair<Cplx>>(&loaded)) {
    u = matvec(*pair, load_vector(opt.in, pair->dim()));
  } else {
    throw data_format_error("matvec: requires a butterfly or lowrank container");
  }
  save_vector(u, opt.out);
  return kExitConverged;
}

// ---------------------------------------------------------------------------
// option wiring

void add_shared(CLI::App* cmd, Options& opt) {
  cmd->add_option("--levels", opt.levels, "butterfly/QTT level count L");
  cmd->add_option("--leaf", opt.leaf, "leaf block size c (n = c * 2^L)");
  cmd->add_option("--rank", opt.rank, "representation rank r");
  cmd->add_option("--init-rank", opt.init_rank, "low-rank initial guess rank R (default r)");
  cmd->add_option("--max-iters", opt.max_iters, "iteration budget");
  cmd->add_option("--tol", opt.tol, "convergence threshold on the train relative error");
  cmd->add_option("--reg", opt.reg, "ridge parameter (default: scale-aware)");
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--threads", opt.threads, "worker threads (results are thread-count invariant)");
  cmd->add_option("--out", opt.out, "output path");
  cmd->add_option("--config", opt.config_path,
                  "JSON config file; command-line flags override");
}

std::vector<std::string> args_with_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  if (args.empty() || args[0].empty() || args[0][0] == '-')
    throw std::invalid_argument("--config requires a leading subcommand");

  std::ifstream in(config_path);
  if (!in) throw data_format_error("cannot open config " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw data_format_error(config_path + ": invalid JSON: " + std::string(ex.what()));
  }
  if (!j.is_object()) throw data_format_error(config_path + ": config must be a JSON object");

  std::vector<std::string> merged{args[0]};
  for (const auto& [key, value] : j.items()) {
    if (key == "config") throw data_format_error("config: nested \"config\" key is not allowed");
    std::string v;
    if (value.is_string())
      v = value.get<std::string>();
    else if (value.is_boolean()) {
      if (value.get<bool>()) merged.push_back("--" + key);
      continue;
    } else
      v = value.dump();
    merged.push_back("--" + key + "=" + v);
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensorized butterfly matrix completion"};
  app.set_version_flag("--version", std::string(library_version));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Options opt;

  auto* gen = app.add_subcommand("generate", "build a test operator and write triplets");
  gen->add_option("--kind", opt.kind,
                  "green | radon | synthetic-butterfly | synthetic-qtt")
      ->required();
  gen->add_option("-n,--size", opt.n, "matrix dimension");
  gen->add_option("--omega", opt.omega, "Green's wavenumber override");
  gen->add_flag("--ones", opt.ones, "fill synthetic cores with ones");
  gen->add_option("--train-count", opt.train_count, "sampled training entries");
  gen->add_option("--test-count", opt.test_count, "sampled held-out entries");
  gen->add_option("--train-out", opt.train_out, "training triplet file");
  gen->add_option("--test-out", opt.test_out, "held-out triplet file");
  add_shared(gen, opt);

  auto* smp = app.add_subcommand("sample", "sample observed entries from a full triplet file");
  smp->add_option("--matrix", opt.matrix, "full-matrix triplet file")->required();
  smp->add_option("-n,--size", opt.n, "matrix dimension")->required();
  smp->add_option("--count", opt.count, "training entries")->required();
  smp->add_option("--test-count", opt.test_count, "held-out entries");
  smp->add_option("--test-out", opt.test_out, "held-out triplet file");
  add_shared(smp, opt);

  auto* cmp = app.add_subcommand("complete", "run a completion pipeline");
  cmp->add_option("--train", opt.train, "training triplet file")->required();
  cmp->add_option("--test", opt.test, "held-out triplet file");
  cmp->add_option("--algo", opt.algo, "als | adam");
  cmp->add_option("--format", opt.format, "butterfly | qtt | lowrank");
  cmp->add_option("--init-iters", opt.init_iters, "low-rank initial guess sweeps");
  cmp->add_option("--oversample", opt.oversample, "conversion oversampling p");
  cmp->add_option("--init-network", opt.init_network, "start from a saved network");
  cmp->add_option("--alpha", opt.alpha, "ADAM learning rate");
  cmp->add_option("--beta1", opt.beta1, "ADAM first-moment decay");
  cmp->add_option("--beta2", opt.beta2, "ADAM second-moment decay");
  cmp->add_option("--sigma", opt.sigma, "ADAM stabilizer");
  cmp->add_flag("--csv", opt.csv, "also write report.csv");
  cmp->add_flag("--record-objective", opt.record_objective,
                "record the regularized objective after every factor solve");
  add_shared(cmp, opt);

  auto* cnv = app.add_subcommand("convert", "convert between container formats");
  cnv->add_option("--in", opt.in, "input container")->required();
  cnv->add_option("--to", opt.to, "butterfly | triplets")->required();
  cnv->add_option("--oversample", opt.oversample, "conversion oversampling p");
  add_shared(cnv, opt);

  auto* evl = app.add_subcommand("eval", "relative error of a network on observed entries");
  evl->add_option("--network", opt.network, "network container")->required();
  evl->add_option("--data", opt.in, "triplet file")->required();
  add_shared(evl, opt);

  auto* mv = app.add_subcommand("matvec", "apply a network to a vector file");
  mv->add_option("--network", opt.network, "network container")->required();
  mv->add_option("--in", opt.in, "input vector file (i,re,im triplets with j = 0)");
  add_shared(mv, opt);

  try {
    auto args = args_with_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);

    if (gen->parsed()) return cmd_generate(opt, gen);
    if (smp->parsed()) return cmd_sample(opt, smp);
    if (cmp->parsed()) return cmd_complete(opt, cmp);
    if (cnv->parsed()) return cmd_convert(opt, cnv);
    if (evl->parsed()) return cmd_eval(opt, evl);
    if (mv->parsed()) return cmd_matvec(opt, mv);
    return kExitUsage;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const data_format_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitDataFormat;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
}
