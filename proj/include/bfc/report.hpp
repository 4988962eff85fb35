#ifndef BFC_REPORT_HPP
#define BFC_REPORT_HPP

#include "bfc/common.hpp"
#include "bfc/version.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace bfc {

// Operation counters accumulated by the solvers; multiplications, roughly.
struct OpCounters {
  std::int64_t chain = 0; // design-row chain products
  std::int64_t gram = 0;  // normal-equation accumulation
  std::int64_t solve = 0; // factorizations and substitutions
  std::int64_t entries = 0;
  std::int64_t groups = 0;
  std::int64_t fallbacks = 0;

  OpCounters& operator+=(const OpCounters& o) {
    chain += o.chain;
    gram += o.gram;
    solve += o.solve;
    entries += o.entries;
    groups += o.groups;
    fallbacks += o.fallbacks;
    return *this;
  }
};

struct IterationRecord {
  int iter = 0;
  double train_err = std::numeric_limits<double>::quiet_NaN();
  double test_err = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0;
  std::vector<std::string> flags;
};

// Per-run convergence log: one record per iteration plus a summary.
struct ConvergenceReport {
  std::vector<IterationRecord> records;
  std::string termination = "max_iterations"; // converged | max_iterations | diverged
  double lambda = 0;                          // ridge actually used (0 for gradient runs)
  double total_seconds = 0;
  OpCounters ops;
  // regularized objective after each factor solve, one row per sweep (optional)
  std::vector<std::vector<double>> objective_trace;

  bool converged() const { return termination == "converged"; }
  double final_train() const {
    return records.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : records.back().train_err;
  }
  double final_test() const {
    return records.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : records.back().test_err;
  }

  nlohmann::json record_json(const IterationRecord& r) const {
    nlohmann::json j{{"iter", r.iter}, {"train_err", r.train_err}, {"seconds", r.seconds}};
    if (std::isnan(r.test_err))
      j["test_err"] = nullptr;
    else
      j["test_err"] = r.test_err;
    j["flags"] = r.flags;
    return j;
  }

  void write_jsonl(std::ostream& os) const {
    for (const auto& r : records) os << record_json(r).dump() << "\n";
  }

  nlohmann::json summary(nlohmann::json config_echo = {}) const {
    nlohmann::json j;
    j["version"] = std::string(library_version);
    j["config"] = std::move(config_echo);
    j["iterations"] = records.size();
    j["termination"] = termination;
    j["lambda"] = lambda;
    j["final_train_err"] = final_train();
    if (std::isnan(final_test()))
      j["final_test_err"] = nullptr;
    else
      j["final_test_err"] = final_test();
    j["total_seconds"] = total_seconds;
    j["normal_solve_fallbacks"] = ops.fallbacks;
    if (!objective_trace.empty()) j["objective_trace"] = objective_trace;
    return j;
  }

  // Canonical string with timing fields removed; equal fingerprints mean the
  // numerical results are bitwise identical.
  std::string fingerprint() const {
    nlohmann::json j;
    j["termination"] = termination;
    j["lambda"] = lambda;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records) {
      auto rj = record_json(r);
      rj.erase("seconds");
      recs.push_back(std::move(rj));
    }
    j["records"] = std::move(recs);
    if (!objective_trace.empty()) j["objective_trace"] = objective_trace;
    return j.dump();
  }
};

} // namespace bfc

#endif
