#ifndef PSSL_BATCH_HPP
#define PSSL_BATCH_HPP

// Seed-parallel batch runner and the summary it produces.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pssl/config.hpp"

namespace pssl::batch {

struct RunRow {
  std::string scheme;
  std::uint64_t seed = 0;
  int overrides_test = 0;
  int overrides_learning = 0;
  int turns_test = 0;
  int override_turns_test = 0;
  std::optional<int> turns_stereo_baseline;
  int contacts = 0;
  double mse = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  std::optional<double> auc;  // empty when the test phase saw one class
  std::size_t training_samples = 0;
};

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single run
};

struct SchemeAggregate {
  std::string scheme;
  int runs = 0;
  Stat overrides_test, overrides_learning, turns_test, mse, tpr, fpr, auc;
  int auc_runs = 0;  // runs with a defined AUC
  // mean test turns relative to the pure-stereo mean, when that ran
  std::optional<double> turns_vs_stereo;
};

struct PairwiseTest {
  std::string a, b;
  double mean_diff = 0.0;  // mean overrides_test of a minus b
  double p_value = 1.0;
};

struct RunSummary {
  double time_scale = 1.0;
  schemes::PhaseDurations phases;  // after scaling
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> dictionary_seed;  // empty: one dictionary per seed
  int bootstrap_iters = 0;
  std::vector<RunRow> rows;  // scheme-major, seeds in config order
  std::vector<SchemeAggregate> aggregates;
  std::vector<PairwiseTest> pairwise;  // learning schemes only
};

Stat describe(const std::vector<double>& values);

// Aggregates and p-values from the rows; pure given the rows.
RunSummary summarize(const config::ExperimentConfig& cfg, std::vector<RunRow> rows);

struct Options {
  bool write_artifacts = true;
  // Called after each finished seed with (done, total); may run on a worker.
  std::function<void(int, int)> progress;
};

// Runs every (scheme x seed) experiment, plus the pure-stereo diagnostic when
// enabled. With cfg.dictionary_seed set, one dictionary is trained up front
// and shared by every run; otherwise each seed trains its own, shared by the
// schemes of that seed. Output is independent of the worker count.
RunSummary run_batch(const config::ExperimentConfig& cfg, const Options& opts = {});

std::string summary_to_json(const RunSummary& summary);

}  // namespace pssl::batch

#endif  // PSSL_BATCH_HPP
