// pet/experiment.cc

#include "pet/experiment.h"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "json.hpp"
#include "pet/error.h"
#include "pet/feature_config.h"

namespace pet {

TrainConfig DefaultBenchmarkTraining() {
  TrainConfig c;
  c.steps = 3000;
  c.learning_rate = 2e-3;
  c.eval_interval = 100;
  return c;
}

void ValidateBenchmarkConfig(const BenchmarkConfig &c) {
  ValidateSpec(c.task);
  ValidateTrainConfig(c.train);
  if (c.n_train < 1) throw Error(ErrorKind::kInvalidConfig, "n_train must be >= 1");
  if (c.n_valid < 1) throw Error(ErrorKind::kInvalidConfig, "n_valid must be >= 1");
  if (c.feature_strings.empty()) {
    throw Error(ErrorKind::kInvalidConfig, "benchmark needs at least one feature config");
  }
  if (c.seeds.empty()) throw Error(ErrorKind::kInvalidConfig, "benchmark needs at least one seed");
  const bool tonal = c.task.tone_count > 0;
  for (const auto &f : c.feature_strings) ParseFeatureString(f, tonal);
}

ConfigSummary Summarize(const std::string &features, const std::vector<BenchmarkRun> &runs) {
  ConfigSummary s;
  s.features = features;
  std::vector<double> pee, clusters;
  for (const auto &r : runs) {
    if (r.features != features) continue;
    ++s.runs;
    s.p_e_given_e += r.report.chain.p_e_given_e;
    s.p_e_given_c += r.report.chain.p_e_given_c;
    s.cer += r.report.chain.cer;
    s.avg_cluster += r.report.clusters.avg_length;
    pee.push_back(r.report.chain.p_e_given_e);
    clusters.push_back(r.report.clusters.avg_length);
  }
  if (s.runs == 0) return s;
  s.p_e_given_e /= s.runs;
  s.p_e_given_c /= s.runs;
  s.cer /= s.runs;
  s.avg_cluster /= s.runs;
  auto stddev = [](const std::vector<double> &v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / v.size());
  };
  s.p_e_given_e_std = stddev(pee, s.p_e_given_e);
  s.avg_cluster_std = stddev(clusters, s.avg_cluster);
  return s;
}

std::string BenchmarkTable(const std::vector<BenchmarkRun> &runs,
                           const std::vector<ConfigSummary> &summaries) {
  std::vector<ModelReport> rows;
  for (const auto &r : runs) rows.push_back(r.report);
  for (const auto &s : summaries) {
    FeatureConfig fc = ParseFeatureString(s.features);
    ModelReport mean;
    mean.label = fmt::format("mean(n={})", s.runs);
    mean.decoder_emb = fc.decoder.ToString();
    mean.joiner_emb = fc.joiner.ToString();
    mean.chain.p_e_given_e = s.p_e_given_e;
    mean.chain.p_e_given_c = s.p_e_given_c;
    mean.chain.p_e_given_e_defined = mean.chain.p_e_given_c_defined = true;
    mean.chain.cer = s.cer;
    mean.clusters.avg_length = s.avg_cluster;
    mean.clusters.empty = false;
    rows.push_back(mean);
  }
  if (rows.size() == 1) rows.push_back(rows.front());
  std::string out = CompareModels(rows);
  if (summaries.size() > 1) {
    const ConfigSummary &base = summaries.front();
    out += fmt::format("\neffect vs {}\tdP(E|E)\tdP(E|C)\tdCER\tdavg-cluster\n", base.features);
    for (std::size_t i = 1; i < summaries.size(); ++i) {
      const ConfigSummary &s = summaries[i];
      out += fmt::format("{}\t{:+.2f}\t{:+.2f}\t{:+.2f}\t{:+.3f}\n", s.features,
                         100.0 * (s.p_e_given_e - base.p_e_given_e),
                         100.0 * (s.p_e_given_c - base.p_e_given_c), 100.0 * (s.cer - base.cer),
                         s.avg_cluster - base.avg_cluster);
    }
  }
  return out;
}

std::string BenchmarkJson(const BenchmarkConfig &config, const std::vector<BenchmarkRun> &runs,
                          const std::vector<ConfigSummary> &summaries) {
  nlohmann::ordered_json j;
  j["task"] = {{"vocab_size", config.task.vocab_size},
               {"n_pronunciations", config.task.n_pronunciations},
               {"tone_count", config.task.tone_count},
               {"seed", config.task.seed},
               {"n_train", config.n_train},
               {"n_valid", config.n_valid}};
  j["training"] = {{"steps", config.train.steps},
                   {"batch_size", config.train.batch_size},
                   {"learning_rate", config.train.learning_rate},
                   {"n_checkpoints_to_average", config.train.n_checkpoints_to_average}};
  j["encoder"] = EncoderKindName(config.dims.encoder);
  nlohmann::ordered_json jr = nlohmann::ordered_json::array();
  for (const auto &r : runs) {
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const auto &p : r.curve) {
      curve.push_back({{"step", p.step}, {"train_loss", p.train_loss}, {"valid_cer", p.valid_cer}});
    }
    jr.push_back({{"features", r.features},
                  {"seed", r.seed},
                  {"p_e_given_e", r.report.chain.p_e_given_e},
                  {"p_e_given_e_defined", r.report.chain.p_e_given_e_defined},
                  {"p_e_given_c", r.report.chain.p_e_given_c},
                  {"p_e_given_c_defined", r.report.chain.p_e_given_c_defined},
                  {"n_cc", r.report.chain.n_cc},
                  {"n_ce", r.report.chain.n_ce},
                  {"n_ec", r.report.chain.n_ec},
                  {"n_ee", r.report.chain.n_ee},
                  {"cer", r.report.chain.cer},
                  {"clusters", r.report.clusters.cluster_lengths.size()},
                  {"avg_cluster_length", r.report.clusters.avg_length},
                  {"curve", std::move(curve)}});
  }
  j["runs"] = std::move(jr);
  nlohmann::ordered_json js = nlohmann::ordered_json::array();
  for (const auto &s : summaries) {
    js.push_back({{"features", s.features},
                  {"runs", s.runs},
                  {"p_e_given_e", s.p_e_given_e},
                  {"p_e_given_e_std", s.p_e_given_e_std},
                  {"p_e_given_c", s.p_e_given_c},
                  {"cer", s.cer},
                  {"avg_cluster_length", s.avg_cluster},
                  {"avg_cluster_length_std", s.avg_cluster_std}});
  }
  j["summaries"] = std::move(js);
  return j.dump(2) + "\n";
}

BenchmarkResult RunBenchmark(const BenchmarkConfig &config, const RunCallback &on_run) {
  ValidateBenchmarkConfig(config);
  SyntheticDataset data = GenerateDataset(config.task, config.n_train + config.n_valid);
  std::vector<Utterance> train, valid;
  SplitTrainValidation(data.utterances, config.n_valid, config.task.seed, &train, &valid);

  ModelDims dims = config.dims;
  dims.input_dim = config.task.feature_dim;

  BenchmarkResult result;
  for (const auto &fs : config.feature_strings) {
    const FeatureConfig features = ParseFeatureString(fs, data.lexicon.tonal());
    for (std::uint64_t seed : config.seeds) {
      const auto start = std::chrono::steady_clock::now();
      ModelParams init = InitModel(data.lexicon, data.vocab, features, dims, seed);
      TrainConfig tc = config.train;
      tc.seed = seed;
      TrainResult trained = Train(init, train, valid, tc);

      DecodeResult decoded = DecodeCorpus(trained.averaged, valid, tc.max_symbols_per_frame);
      std::vector<Alignment> alignments;
      alignments.reserve(valid.size());
      for (std::size_t i = 0; i < valid.size(); ++i) {
        alignments.push_back(Align(valid[i].y, decoded.hyps[i]));
      }

      BenchmarkRun run;
      run.features = fs;
      run.seed = seed;
      run.report.label = fmt::format("seed={}", seed);
      run.report.decoder_emb = features.decoder.ToString();
      run.report.joiner_emb = features.joiner.ToString();
      run.report.chain = ComputeChainStats(alignments);
      run.report.clusters = ComputeClusterStats(alignments);
      run.curve = std::move(trained.curve);
      run.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (on_run) on_run(run);
      result.runs.push_back(std::move(run));
    }
  }
  for (const auto &fs : config.feature_strings) {
    result.summaries.push_back(Summarize(fs, result.runs));
  }
  result.table = BenchmarkTable(result.runs, result.summaries);
  result.json = BenchmarkJson(config, result.runs, result.summaries);
  return result;
}

}  // namespace pet
