// Parameter bundle shared by the subcommands, loadable from a JSON file.
//
//   {"task": {...}, "data": {"n_train", "n_valid"},
//    "model": {"features", "encoder", "encoder_dim", "embed_dim", "decoder_dim"},
//    "train": {...}, "benchmark": {"features": [...], "seeds": [...]}}
//
// Every key is optional; unknown keys are rejected.

#pragma once

#include <string>

#include "pet/experiment.h"

namespace pet::cli {

struct RunConfig {
  BenchmarkConfig bench;  // task, data sizes, dims, training, benchmark lists
  std::string features = "W";
};

// Throws InvalidConfig on unknown keys or wrongly typed values.
void ApplyJson(const std::string &json_text, RunConfig &config);
std::string ToJson(const RunConfig &config);

}  // namespace pet::cli
