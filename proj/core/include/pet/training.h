// pet/training.h
//
// Mini-batch training on the transducer loss with an Adam optimizer,
// periodic validation by greedy decoding, and averaging of the k best
// checkpoints by validation CER.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pet/synthetic.h"
#include "pet/transducer.h"

namespace pet {

struct TrainConfig {
  int batch_size = 16;
  int steps = 2000;
  double learning_rate = 1e-3;
  int warmup_steps = 0;           // linear warmup from 0
  double final_lr_fraction = 1.0;  // linear decay to lr * fraction at the last step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
  int eval_interval = 200;
  int n_checkpoints_to_average = 5;
  int max_symbols_per_frame = 4;
  std::uint64_t seed = 1;  // data order
  int num_threads = 1;
};

// Throws InvalidConfig.
void ValidateTrainConfig(const TrainConfig &config);

// Learning rate applied at `step` (0-based).
double LearningRateAt(const TrainConfig &config, int step);

struct EvalPoint {
  int step = 0;           // optimizer steps taken
  double train_loss = 0;  // mean per-utterance loss since the previous point
  double valid_cer = 0;
};

struct SavedCheckpoint {
  int step = 0;
  double valid_cer = 0;
  ModelParams params;
};

struct TrainResult {
  ModelParams averaged;                // mean of `best`
  ModelParams last;                    // parameters after the final step
  std::vector<SavedCheckpoint> best;   // ascending (valid_cer, step)
  std::vector<EvalPoint> curve;
};

using EvalCallback = std::function<void(const EvalPoint &)>;

// Throws DivergenceDetected when the loss or the parameters become
// non-finite.
TrainResult Train(const ModelParams &init, std::span<const Utterance> train,
                  std::span<const Utterance> valid, const TrainConfig &config,
                  const EvalCallback &on_eval = {});

// Mean batch loss and gradient (averaged over the batch). Per-utterance
// gradients are summed in batch order, so the result does not depend on the
// thread count.
double BatchGradient(const ModelParams &params, std::span<const Utterance> batch,
                     ModelParams &grads, int num_threads = 1);

class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams &params, double beta1, double beta2, double epsilon);
  void Step(ModelParams &params, const ModelParams &grads, double learning_rate);
  int steps_taken() const { return t_; }

 private:
  ModelParams m_, v_;
  double beta1_, beta2_, epsilon_;
  int t_ = 0;
};

// Element-wise mean over checkpoints. Values are summed in ascending order
// per element, so the mean is invariant under permutation of the inputs and
// equal inputs average to themselves exactly. Throws ConfigMismatch when the
// checkpoints differ in structure, InvalidConfig when empty.
ModelParams AverageCheckpoints(std::span<const ModelParams> checkpoints);

struct DecodeResult {
  std::vector<TokenSequence> hyps;
  double cer = 0.0;  // corpus-level
};

DecodeResult DecodeCorpus(const ModelParams &params, std::span<const Utterance> utterances,
                          int max_symbols_per_frame = 4);

// Every tensor of `params` as a flat span, in ForEachTensor order.
std::vector<std::span<double>> TensorSpans(ModelParams &params);

}  // namespace pet
