#include "run_config.h"

#include <set>

#include "json.hpp"

#include "pet/error.h"

namespace pet::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void Fail(const std::string &what) { throw Error(ErrorKind::kInvalidConfig, what); }

void CheckKeys(const json &j, const std::string &section, const std::set<std::string> &allowed) {
  if (!j.is_object()) Fail("config section '" + section + "' must be an object");
  for (const auto &[key, _] : j.items()) {
    if (!allowed.count(key)) Fail("unknown config key '" + section + "." + key + "'");
  }
}

template <typename T>
void Get(const json &j, const char *key, T &out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &) {
    Fail(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

void ApplyJson(const std::string &json_text, RunConfig &c) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw Error(ErrorKind::kParse, std::string("config: ") + e.what());
  }
  CheckKeys(root, "", {"task", "data", "model", "train", "benchmark"});

  if (root.contains("task")) {
    const json &j = root["task"];
    CheckKeys(j, "task",
              {"vocab_size", "n_pronunciations", "tone_count", "min_frames_per_token",
               "max_frames_per_token", "feature_dim", "noise_std", "consonant_weight",
               "onset_strength", "min_tokens", "max_tokens", "branching", "context_noise", "seed"});
    SyntheticTaskSpec &t = c.bench.task;
    Get(j, "vocab_size", t.vocab_size);
    Get(j, "n_pronunciations", t.n_pronunciations);
    Get(j, "tone_count", t.tone_count);
    Get(j, "min_frames_per_token", t.min_frames_per_token);
    Get(j, "max_frames_per_token", t.max_frames_per_token);
    Get(j, "feature_dim", t.feature_dim);
    Get(j, "noise_std", t.noise_std);
    Get(j, "consonant_weight", t.consonant_weight);
    Get(j, "onset_strength", t.onset_strength);
    Get(j, "min_tokens", t.min_tokens);
    Get(j, "max_tokens", t.max_tokens);
    Get(j, "branching", t.branching);
    Get(j, "context_noise", t.context_noise);
    Get(j, "seed", t.seed);
  }
  if (root.contains("data")) {
    const json &j = root["data"];
    CheckKeys(j, "data", {"n_train", "n_valid"});
    Get(j, "n_train", c.bench.n_train);
    Get(j, "n_valid", c.bench.n_valid);
  }
  if (root.contains("model")) {
    const json &j = root["model"];
    CheckKeys(j, "model", {"features", "encoder", "encoder_dim", "embed_dim", "decoder_dim"});
    Get(j, "features", c.features);
    std::string encoder(EncoderKindName(c.bench.dims.encoder));
    Get(j, "encoder", encoder);
    c.bench.dims.encoder = ParseEncoderKind(encoder);
    Get(j, "encoder_dim", c.bench.dims.encoder_dim);
    Get(j, "embed_dim", c.bench.dims.embed_dim);
    Get(j, "decoder_dim", c.bench.dims.decoder_dim);
  }
  if (root.contains("train")) {
    const json &j = root["train"];
    CheckKeys(j, "train",
              {"batch_size", "steps", "learning_rate", "warmup_steps", "final_lr_fraction", "beta1",
               "beta2", "epsilon", "clip_norm", "eval_interval", "n_checkpoints_to_average",
               "max_symbols_per_frame", "seed", "num_threads"});
    TrainConfig &t = c.bench.train;
    Get(j, "batch_size", t.batch_size);
    Get(j, "steps", t.steps);
    Get(j, "learning_rate", t.learning_rate);
    Get(j, "warmup_steps", t.warmup_steps);
    Get(j, "final_lr_fraction", t.final_lr_fraction);
    Get(j, "beta1", t.beta1);
    Get(j, "beta2", t.beta2);
    Get(j, "epsilon", t.epsilon);
    Get(j, "clip_norm", t.clip_norm);
    Get(j, "eval_interval", t.eval_interval);
    Get(j, "n_checkpoints_to_average", t.n_checkpoints_to_average);
    Get(j, "max_symbols_per_frame", t.max_symbols_per_frame);
    Get(j, "seed", t.seed);
    Get(j, "num_threads", t.num_threads);
  }
  if (root.contains("benchmark")) {
    const json &j = root["benchmark"];
    CheckKeys(j, "benchmark", {"features", "seeds"});
    Get(j, "features", c.bench.feature_strings);
    Get(j, "seeds", c.bench.seeds);
  }
}

std::string ToJson(const RunConfig &c) {
  const SyntheticTaskSpec &t = c.bench.task;
  const TrainConfig &tr = c.bench.train;
  ordered_json j;
  j["task"] = {{"vocab_size", t.vocab_size},
               {"n_pronunciations", t.n_pronunciations},
               {"tone_count", t.tone_count},
               {"min_frames_per_token", t.min_frames_per_token},
               {"max_frames_per_token", t.max_frames_per_token},
               {"feature_dim", t.feature_dim},
               {"noise_std", t.noise_std},
               {"consonant_weight", t.consonant_weight},
               {"onset_strength", t.onset_strength},
               {"min_tokens", t.min_tokens},
               {"max_tokens", t.max_tokens},
               {"branching", t.branching},
               {"context_noise", t.context_noise},
               {"seed", t.seed}};
  j["data"] = {{"n_train", c.bench.n_train}, {"n_valid", c.bench.n_valid}};
  j["model"] = {{"features", c.features},
                {"encoder", EncoderKindName(c.bench.dims.encoder)},
                {"encoder_dim", c.bench.dims.encoder_dim},
                {"embed_dim", c.bench.dims.embed_dim},
                {"decoder_dim", c.bench.dims.decoder_dim}};
  j["train"] = {{"batch_size", tr.batch_size},
                {"steps", tr.steps},
                {"learning_rate", tr.learning_rate},
                {"warmup_steps", tr.warmup_steps},
                {"final_lr_fraction", tr.final_lr_fraction},
                {"beta1", tr.beta1},
                {"beta2", tr.beta2},
                {"epsilon", tr.epsilon},
                {"clip_norm", tr.clip_norm},
                {"eval_interval", tr.eval_interval},
                {"n_checkpoints_to_average", tr.n_checkpoints_to_average},
                {"max_symbols_per_frame", tr.max_symbols_per_frame},
                {"seed", tr.seed},
                {"num_threads", tr.num_threads}};
  j["benchmark"] = {{"features", c.bench.feature_strings}, {"seeds", c.bench.seeds}};
  return j.dump(2) + "\n";
}

}  // namespace pet::cli
