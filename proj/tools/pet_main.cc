// pet: command-line driver for data generation, training, decoding, folding,
// lexicon statistics, error analysis and the embedding benchmark.
//
// Reports go to stdout and to files under --out-dir; anything that depends on
// wall-clock time goes to stderr only, so a fixed --seed gives byte-identical
// report files.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pet/analysis.h"
#include "pet/checkpoint.h"
#include "pet/error.h"
#include "pet/experiment.h"
#include "pet/lexicon.h"
#include "pet/synthetic.h"
#include "pet/text_utils.h"
#include "pet/training.h"
#include "pet/transducer.h"
#include "run_config.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace pet::cli {
namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = "pet_out";
};

std::string OutPath(const Globals &g, const std::string &name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

RunConfig LoadRunConfig(const Globals &g) {
  RunConfig c;
  if (!g.config_path.empty()) ApplyJson(ReadFile(g.config_path), c);
  return c;
}

std::string InventoryText(const ConsonantInventory &inventory) {
  std::string out;
  for (const auto &c : inventory) out += c + "\n";
  return out;
}

// Files written by gen-data and read back by train.
struct DataDir {
  std::string root;
  std::string Path(const char *name) const { return (fs::path(root) / name).string(); }
};

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  std::optional<int> n_train, n_valid, vocab_size, n_pron, tones;
};

int GenData(const Globals &g, const GenDataArgs &a) {
  RunConfig c = LoadRunConfig(g);
  BenchmarkConfig &b = c.bench;
  if (g.seed) b.task.seed = *g.seed;
  if (a.n_train) b.n_train = *a.n_train;
  if (a.n_valid) b.n_valid = *a.n_valid;
  if (a.vocab_size) b.task.vocab_size = *a.vocab_size;
  if (a.n_pron) b.task.n_pronunciations = *a.n_pron;
  if (a.tones) b.task.tone_count = *a.tones;
  ValidateSpec(b.task);
  if (b.n_train < 1 || b.n_valid < 1) {
    throw Error(ErrorKind::kInvalidConfig, "n_train and n_valid must be >= 1");
  }

  SyntheticDataset data = GenerateDataset(b.task, b.n_train + b.n_valid);
  std::vector<Utterance> train, valid;
  SplitTrainValidation(data.utterances, b.n_valid, b.task.seed, &train, &valid);

  WriteVocab(OutPath(g, "vocab.txt"), data.vocab);
  WriteFile(OutPath(g, "lexicon.tsv"), data.lexicon.Serialize());
  WriteFile(OutPath(g, "initials.txt"), InventoryText(data.lexicon.consonant_inventory()));
  WriteManifest(OutPath(g, "train.tsv"), "frames", train, data.vocab);
  WriteManifest(OutPath(g, "valid.tsv"), "frames", valid, data.vocab);
  WriteFile(OutPath(g, "config.json"), ToJson(c));

  const HomophoneHistogram hist = ComputeHomophoneHistogram(data.lexicon, false);
  ordered_json j;
  j["train_utterances"] = train.size();
  j["valid_utterances"] = valid.size();
  j["vocab_size"] = data.vocab.size();
  j["distinct_pronunciations"] = hist.DistinctPronunciations();
  j["tonal"] = data.lexicon.tonal();
  WriteFile(OutPath(g, "data.json"), j.dump(2) + "\n");
  fmt::print("wrote {} train and {} valid utterances to {}\n", train.size(), valid.size(),
             g.out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data_dir;
  std::optional<std::string> features;
  std::optional<int> steps, batch_size, eval_interval, threads;
  std::optional<double> learning_rate;
  std::optional<std::string> encoder;
};

std::string CurveTsv(const std::vector<EvalPoint> &curve) {
  std::string out = "step\ttrain_loss\tvalid_cer\n";
  for (const auto &p : curve) out += fmt::format("{}\t{:.6f}\t{:.6f}\n", p.step, p.train_loss, p.valid_cer);
  return out;
}

int TrainCommand(const Globals &g, const TrainArgs &a) {
  RunConfig c = LoadRunConfig(g);
  if (a.features) c.features = *a.features;
  TrainConfig &t = c.bench.train;
  if (g.seed) t.seed = *g.seed;
  if (a.steps) t.steps = *a.steps;
  if (a.batch_size) t.batch_size = *a.batch_size;
  if (a.eval_interval) t.eval_interval = *a.eval_interval;
  if (a.threads) t.num_threads = *a.threads;
  if (a.learning_rate) t.learning_rate = *a.learning_rate;
  if (a.encoder) c.bench.dims.encoder = ParseEncoderKind(*a.encoder);
  ValidateTrainConfig(t);

  const DataDir d{a.data_dir};
  const std::vector<std::string> vocab = ReadVocab(d.Path("vocab.txt"));
  const Lexicon lex =
      LoadLexiconFile(d.Path("lexicon.tsv"), ReadConsonantInventory(d.Path("initials.txt")));
  const std::vector<Utterance> train = ReadManifest(d.Path("train.tsv"), vocab);
  const std::vector<Utterance> valid = ReadManifest(d.Path("valid.tsv"), vocab);
  if (train.empty()) throw Error(ErrorKind::kEmptyCorpus, "no training utterances");

  ModelDims dims = c.bench.dims;
  dims.input_dim = static_cast<int>(train.front().x.frames.cols());
  const FeatureConfig features = ParseFeatureString(c.features, lex.tonal());
  const ModelParams init = InitModel(lex, vocab, features, dims, t.seed);

  TrainResult r = Train(init, train, valid, t, [](const EvalPoint &p) {
    fmt::print("step {}\tloss {:.4f}\tvalid CER {:.4f}\n", p.step, p.train_loss, p.valid_cer);
    std::fflush(stdout);
  });

  CheckpointMetadata meta{{"features", features.ToString()},
                          {"averaged", std::to_string(r.best.size())}};
  SaveCheckpoint(OutPath(g, "model.ckpt"), r.averaged, meta);
  SaveCheckpoint(OutPath(g, "last.ckpt"), r.last, {{"features", features.ToString()}});
  WriteFile(OutPath(g, "curve.tsv"), CurveTsv(r.curve));
  WriteFile(OutPath(g, "config.json"), ToJson(c));

  const DecodeResult dev = DecodeCorpus(r.averaged, valid.empty() ? train : valid,
                                        t.max_symbols_per_frame);
  ordered_json j;
  j["features"] = features.ToString();
  j["parameters"] = r.averaged.NumParameters();
  j["steps"] = t.steps;
  ordered_json best = ordered_json::array();
  for (const auto &b : r.best) best.push_back({{"step", b.step}, {"valid_cer", b.valid_cer}});
  j["averaged_checkpoints"] = std::move(best);
  j["averaged_valid_cer"] = dev.cer;
  WriteFile(OutPath(g, "train.json"), j.dump(2) + "\n");
  fmt::print("averaged model: valid CER {:.4f}, saved to {}\n", dev.cer, OutPath(g, "model.ckpt"));
  return 0;
}

// ---------------------------------------------------------------------------
// decode

struct DecodeArgs {
  std::string checkpoint, manifest;
  int max_symbols = 4;
};

int DecodeCommand(const Globals &g, const DecodeArgs &a) {
  const ModelParams m = LoadCheckpoint(a.checkpoint);
  const std::vector<Utterance> utts = ReadManifest(a.manifest, m.vocab);
  const DecodeResult r = DecodeCorpus(m, utts, a.max_symbols);
  std::string ref, hyp;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    ref += TokensToText(utts[i].y, m.vocab) + "\n";
    hyp += TokensToText(r.hyps[i], m.vocab) + "\n";
  }
  WriteFile(OutPath(g, "ref.txt"), ref);
  WriteFile(OutPath(g, "hyp.txt"), hyp);
  ordered_json j;
  j["checkpoint"] = a.checkpoint;
  j["features"] = m.features.ToString();
  j["utterances"] = utts.size();
  j["cer"] = r.cer;
  WriteFile(OutPath(g, "decode.json"), j.dump(2) + "\n");
  fmt::print("decoded {} utterances, CER {:.4f}\n", utts.size(), r.cer);
  return 0;
}

// ---------------------------------------------------------------------------
// fold

int FoldCommand(const std::string &checkpoint, const std::string &out) {
  CheckpointMetadata meta;
  const ModelParams m = LoadCheckpoint(checkpoint, &meta);
  const ModelParams folded = FoldModel(m);
  meta["folded"] = "1";
  SaveCheckpoint(out, folded, meta);
  fmt::print("folded {} ({} -> {} parameters) into {}\n", m.features.ToString(),
             m.NumParameters(), folded.NumParameters(), out);
  return 0;
}

// ---------------------------------------------------------------------------
// lexicon-stats

struct LexiconStatsArgs {
  std::string lexicon, inventory;
  bool tone_sensitive = false;
};

int LexiconStats(const Globals &g, const LexiconStatsArgs &a) {
  const ConsonantInventory inventory = ReadConsonantInventory(a.inventory);
  const Lexicon lex = LoadLexiconFile(a.lexicon, inventory);
  const HomophoneHistogram h = ComputeHomophoneHistogram(lex, a.tone_sensitive);
  std::cout << "homophones\tpronunciations\n" << h.ToText();
  ordered_json j;
  j["entries"] = h.TotalEntries();
  j["distinct_pronunciations"] = h.DistinctPronunciations();
  j["tone_sensitive"] = a.tone_sensitive;
  j["tonal"] = lex.tonal();
  ordered_json buckets = ordered_json::array();
  for (const auto &[x, y] : h.buckets) buckets.push_back({{"homophones", x}, {"pronunciations", y}});
  j["histogram"] = std::move(buckets);
  WriteFile(OutPath(g, "lexicon_stats.json"), j.dump(2) + "\n");
  WriteFile(OutPath(g, "lexicon_histogram.tsv"), "homophones\tpronunciations\n" + h.ToText());
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string ref;
  std::vector<std::string> hyps, labels;
  bool per_char = false;
  std::string lexicon, inventory;
};

std::string ClusterHistogramTsv(const ClusterStats &s) {
  std::map<int, int> counts;
  for (int len : s.cluster_lengths) ++counts[len];
  std::string out = "length\tcount\n";
  for (const auto &[len, n] : counts) out += fmt::format("{}\t{}\n", len, n);
  return out;
}

int Analyze(const Globals &g, const AnalyzeArgs &a) {
  if (!a.labels.empty() && a.labels.size() != a.hyps.size()) {
    throw Error(ErrorKind::kInvalidConfig, "give one --label per --hyp");
  }
  const std::string ref_text = ReadFile(a.ref);
  std::optional<Lexicon> lex;
  if (!a.lexicon.empty()) {
    lex = LoadLexiconFile(a.lexicon, a.inventory.empty() ? ConsonantInventory{}
                                                         : ReadConsonantInventory(a.inventory));
  }

  std::vector<ModelReport> reports;
  ordered_json profiles = ordered_json::array();
  for (std::size_t i = 0; i < a.hyps.size(); ++i) {
    const TextCorpus corpus = TokenizeCorpus(ref_text, ReadFile(a.hyps[i]), a.per_char);
    std::vector<Alignment> alignments;
    for (std::size_t n = 0; n < corpus.refs.size(); ++n) {
      alignments.push_back(Align(corpus.refs[n], corpus.hyps[n]));
    }
    ModelReport r;
    r.label = a.labels.empty() ? fs::path(a.hyps[i]).filename().string() : a.labels[i];
    r.decoder_emb = r.joiner_emb = "-";
    r.chain = ComputeChainStats(alignments);
    r.clusters = ComputeClusterStats(alignments);
    WriteFile(OutPath(g, fmt::format("alignment_{}.tsv", i)), AlignmentReportTsv(alignments, corpus));
    WriteFile(OutPath(g, fmt::format("clusters_{}.tsv", i)), ClusterHistogramTsv(r.clusters));
    if (lex) {
      const SubstitutionProfile p =
          ProfileSubstitutions(alignments, corpus.refs, corpus.hyps, corpus.symbols, *lex);
      profiles.push_back({{"label", r.label},
                          {"substitutions", p.substitutions},
                          {"same_pron", p.same_pron},
                          {"same_rhyme", p.same_rhyme}});
    }
    reports.push_back(std::move(r));
  }

  std::string text;
  if (reports.size() >= 2) {
    text = CompareModels(reports);
  } else {
    const ModelReport &r = reports.front();
    text = fmt::format(
        "label\t{}\nP(E|E)\t{:.2f}{}\nP(E|C)\t{:.2f}{}\nCER\t{:.2f}\navg-cluster\t{:.3f}{}\n",
        r.label, 100.0 * r.chain.p_e_given_e, r.chain.p_e_given_e_defined ? "" : "*",
        100.0 * r.chain.p_e_given_c, r.chain.p_e_given_c_defined ? "" : "*", 100.0 * r.chain.cer,
        r.clusters.avg_length, r.clusters.empty ? "*" : "");
  }
  text += "# insertions mark the following reference position (trailing: the last); * undefined\n";
  std::cout << text;
  WriteFile(OutPath(g, "analysis.txt"), text);

  ordered_json j = ordered_json::parse(ReportsToJson(reports));
  if (lex) j = {{"reports", std::move(j)}, {"substitutions", std::move(profiles)}};
  WriteFile(OutPath(g, "analysis.json"), j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkArgs {
  std::vector<std::string> features;
  std::vector<std::uint64_t> seeds;
  std::optional<int> n_train, n_valid, steps, eval_interval, threads;
  std::optional<double> learning_rate;
  std::optional<std::string> encoder;
};

int BenchmarkCommand(const Globals &g, const BenchmarkArgs &a) {
  RunConfig c = LoadRunConfig(g);
  BenchmarkConfig &b = c.bench;
  if (g.seed) b.task.seed = *g.seed;
  if (!a.features.empty()) b.feature_strings = a.features;
  if (!a.seeds.empty()) b.seeds = a.seeds;
  if (a.n_train) b.n_train = *a.n_train;
  if (a.n_valid) b.n_valid = *a.n_valid;
  if (a.steps) b.train.steps = *a.steps;
  if (a.eval_interval) b.train.eval_interval = *a.eval_interval;
  if (a.threads) b.train.num_threads = *a.threads;
  if (a.learning_rate) b.train.learning_rate = *a.learning_rate;
  if (a.encoder) b.dims.encoder = ParseEncoderKind(*a.encoder);

  BenchmarkResult r = RunBenchmark(b, [](const BenchmarkRun &run) {
    fmt::print(stderr, "{} seed={}: CER {:.4f} ({:.1f}s)\n", run.features, run.seed,
               run.report.chain.cer, run.seconds);
  });
  std::string curves = "features\tseed\tstep\ttrain_loss\tvalid_cer\n";
  for (const auto &run : r.runs) {
    for (const auto &p : run.curve) {
      curves += fmt::format("{}\t{}\t{}\t{:.6f}\t{:.6f}\n", run.features, run.seed, p.step,
                            p.train_loss, p.valid_cer);
    }
  }
  std::cout << r.table;
  WriteFile(OutPath(g, "benchmark.txt"), r.table);
  WriteFile(OutPath(g, "benchmark.json"), r.json);
  WriteFile(OutPath(g, "curves.tsv"), curves);
  WriteFile(OutPath(g, "config.json"), ToJson(c));
  return 0;
}

int Run(int argc, char **argv) {
  CLI::App app{"Pronunciation-aware embedding toolkit for transducer models"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto *seed_opt = app.add_option("--seed", seed, "Seed for data generation, init and data order");
  app.add_option("--config", g.config_path, "JSON parameter file")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Directory for report files")->capture_default_str();

  GenDataArgs gen;
  auto *gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic task");
  gen_cmd->add_option("--n-train", gen.n_train);
  gen_cmd->add_option("--n-valid", gen.n_valid);
  gen_cmd->add_option("--vocab-size", gen.vocab_size);
  gen_cmd->add_option("--n-pron", gen.n_pron, "Distinct pronunciations");
  gen_cmd->add_option("--tones", gen.tones, "Tone count; 0 for a non-tonal task");

  TrainArgs train;
  auto *train_cmd = app.add_subcommand("train", "Train a model on a gen-data directory");
  train_cmd->add_option("--data", train.data_dir, "Directory written by gen-data")->required();
  train_cmd->add_option("--features", train.features, "Feature string, e.g. V or CV-CVW");
  train_cmd->add_option("--steps", train.steps);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--eval-interval", train.eval_interval);
  train_cmd->add_option("--lr", train.learning_rate);
  train_cmd->add_option("--threads", train.threads);
  train_cmd->add_option("--encoder", train.encoder, "recurrent or feedforward");

  DecodeArgs decode;
  auto *decode_cmd = app.add_subcommand("decode", "Greedy-decode a manifest");
  decode_cmd->add_option("--checkpoint", decode.checkpoint)->required();
  decode_cmd->add_option("--manifest", decode.manifest)->required();
  decode_cmd->add_option("--max-symbols", decode.max_symbols, "Emissions per frame")
      ->capture_default_str();

  std::string fold_in, fold_out;
  auto *fold_cmd = app.add_subcommand("fold", "Precompute final embedding tables");
  fold_cmd->add_option("--checkpoint", fold_in)->required();
  fold_cmd->add_option("--out", fold_out)->required();

  LexiconStatsArgs lstats;
  auto *lex_cmd = app.add_subcommand("lexicon-stats", "Homophone histogram of a lexicon");
  lex_cmd->add_option("--lexicon", lstats.lexicon)->required();
  lex_cmd->add_option("--inventory", lstats.inventory, "Onset consonants, one per line")
      ->required();
  lex_cmd->add_flag("--tone-sensitive", lstats.tone_sensitive);

  AnalyzeArgs analyze;
  auto *analyze_cmd = app.add_subcommand("analyze", "Error-chain analysis of hypotheses");
  analyze_cmd->add_option("--ref", analyze.ref)->required();
  analyze_cmd->add_option("--hyp", analyze.hyps, "Hypothesis file; repeat to compare")
      ->required();
  analyze_cmd->add_option("--label", analyze.labels, "Row label per --hyp");
  analyze_cmd->add_flag("--per-char", analyze.per_char, "One token per character");
  analyze_cmd->add_option("--lexicon", analyze.lexicon, "Lexicon for substitution profiles");
  analyze_cmd->add_option("--inventory", analyze.inventory);

  BenchmarkArgs bench;
  auto *bench_cmd = app.add_subcommand("benchmark", "Train and compare feature configs");
  bench_cmd->add_option("--features", bench.features, "Feature strings (default W V)");
  bench_cmd->add_option("--seeds", bench.seeds, "Training seeds (default 1 2 3)");
  bench_cmd->add_option("--n-train", bench.n_train);
  bench_cmd->add_option("--n-valid", bench.n_valid);
  bench_cmd->add_option("--steps", bench.steps);
  bench_cmd->add_option("--eval-interval", bench.eval_interval);
  bench_cmd->add_option("--lr", bench.learning_rate);
  bench_cmd->add_option("--threads", bench.threads);
  bench_cmd->add_option("--encoder", bench.encoder);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  if (*gen_cmd) return GenData(g, gen);
  if (*train_cmd) return TrainCommand(g, train);
  if (*decode_cmd) return DecodeCommand(g, decode);
  if (*fold_cmd) return FoldCommand(fold_in, fold_out);
  if (*lex_cmd) return LexiconStats(g, lstats);
  if (*analyze_cmd) return Analyze(g, analyze);
  if (*bench_cmd) return BenchmarkCommand(g, bench);
  return 1;
}

}  // namespace
}  // namespace pet::cli

int main(int argc, char **argv) {
  try {
    return pet::cli::Run(argc, argv);
  } catch (const pet::Error &e) {
    std::cerr << "pet: " << e.what() << "\n";
    return pet::ExitCodeFor(e.kind());
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "pet: " << e.what() << "\n";
    return 2;
  }
}
