// pet/experiment.h
//
// End-to-end comparison of embedding configurations on the synthetic task:
// one shared dataset, then for every (feature config, seed) a model is
// initialised, trained, decoded on the validation set and analysed.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pet/analysis.h"
#include "pet/synthetic.h"
#include "pet/training.h"
#include "pet/transducer.h"

namespace pet {

// Training settings of the default benchmark: long enough, and evaluated
// often enough, that the averaged checkpoints come from the converged part of
// the run.
TrainConfig DefaultBenchmarkTraining();

struct BenchmarkConfig {
  SyntheticTaskSpec task;
  int n_train = 2000;
  int n_valid = 300;
  std::vector<std::string> feature_strings{"W", "V"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  ModelDims dims;
  TrainConfig train = DefaultBenchmarkTraining();
};

// Throws InvalidConfig / InvalidSpec.
void ValidateBenchmarkConfig(const BenchmarkConfig &config);

struct BenchmarkRun {
  std::string features;  // as given, e.g. "V"
  std::uint64_t seed = 0;
  ModelReport report;
  std::vector<EvalPoint> curve;
  double seconds = 0.0;  // wall clock, not part of any report
};

struct ConfigSummary {
  std::string features;
  int runs = 0;
  double p_e_given_e = 0.0;  // means over seeds
  double p_e_given_c = 0.0;
  double cer = 0.0;
  double avg_cluster = 0.0;
  double p_e_given_e_std = 0.0;  // population standard deviation over seeds
  double avg_cluster_std = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRun> runs;          // config-major, seeds in order
  std::vector<ConfigSummary> summaries;    // one per config, in order
  std::string table;  // comparison table, per-config means and effects
  std::string json;   // structured summary
};

using RunCallback = std::function<void(const BenchmarkRun &)>;

// The training seed of each run is `seed`; the dataset comes from
// config.task.seed and is shared by every run.
BenchmarkResult RunBenchmark(const BenchmarkConfig &config, const RunCallback &on_run = {});

ConfigSummary Summarize(const std::string &features, const std::vector<BenchmarkRun> &runs);

// Table text for already computed runs (used by RunBenchmark).
std::string BenchmarkTable(const std::vector<BenchmarkRun> &runs,
                           const std::vector<ConfigSummary> &summaries);
std::string BenchmarkJson(const BenchmarkConfig &config, const std::vector<BenchmarkRun> &runs,
                          const std::vector<ConfigSummary> &summaries);

}  // namespace pet
