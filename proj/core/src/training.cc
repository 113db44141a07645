// pet/training.cc

#include "pet/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "pet/analysis.h"
#include "pet/error.h"

namespace pet {

std::vector<std::span<double>> TensorSpans(ModelParams &params) {
  std::vector<std::span<double>> spans;
  params.ForEachTensor([&](const auto &, auto &t) {
    spans.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
  });
  return spans;
}

namespace {

void ZeroTensors(ModelParams &p) {
  p.ForEachTensor([](const auto &, auto &t) { t.setZero(); });
}

}  // namespace

void ValidateTrainConfig(const TrainConfig &c) {
  auto fail = [](const std::string &why) { throw Error(ErrorKind::kInvalidConfig, why); };
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.steps < 0) fail("steps must be >= 0");
  if (!(c.learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (c.warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (!(c.final_lr_fraction >= 0.0)) fail("final_lr_fraction must be >= 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    fail("Adam betas must be in [0, 1)");
  }
  if (!(c.epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(c.clip_norm >= 0.0)) fail("clip_norm must be >= 0");
  if (c.eval_interval < 1) fail("eval_interval must be >= 1");
  if (c.n_checkpoints_to_average < 1) fail("n_checkpoints_to_average must be >= 1");
  if (c.max_symbols_per_frame < 1) fail("max_symbols_per_frame must be >= 1");
  if (c.num_threads < 1) fail("num_threads must be >= 1");
}

double LearningRateAt(const TrainConfig &c, int step) {
  double lr = c.learning_rate;
  if (c.warmup_steps > 0 && step < c.warmup_steps) {
    lr *= static_cast<double>(step + 1) / c.warmup_steps;
  }
  if (c.steps > 1) {
    const double progress = static_cast<double>(step) / (c.steps - 1);
    lr *= 1.0 - (1.0 - c.final_lr_fraction) * progress;
  }
  return lr;
}

// ---------------------------------------------------------------------------

namespace {

// Per-utterance gradient buffers, reused across steps.
class GradientWorkspace {
 public:
  GradientWorkspace(const ModelParams &params, int batch_size) {
    for (int b = 0; b < batch_size; ++b) buffers_.push_back(params.ZerosLike());
  }

  double Compute(const ModelParams &params, std::span<const Utterance> batch,
                 ModelParams &grads, int num_threads) {
    const int n = static_cast<int>(batch.size());
    std::vector<double> losses(n, 0.0);
    auto work = [&](int begin, int end) {
      for (int b = begin; b < end; ++b) {
        ZeroTensors(buffers_[b]);
        losses[b] = LossAndGradient(params, batch[b].x, batch[b].y, &buffers_[b]);
      }
    };
    const int threads = std::min(num_threads, n);
    if (threads <= 1) {
      work(0, n);
    } else {
      std::vector<std::jthread> pool;
      std::vector<std::exception_ptr> errors(threads);
      for (int k = 0; k < threads; ++k) {
        const int begin = n * k / threads, end = n * (k + 1) / threads;
        pool.emplace_back([&, k, begin, end] {
          try {
            work(begin, end);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
      pool.clear();
      for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    ZeroTensors(grads);
    auto total = TensorSpans(grads);
    for (int b = 0; b < n; ++b) {
      auto part = TensorSpans(buffers_[b]);
      for (std::size_t k = 0; k < total.size(); ++k) {
        for (std::size_t i = 0; i < total[k].size(); ++i) total[k][i] += part[k][i];
      }
    }
    const double scale = 1.0 / n;
    for (auto s : total) {
      for (double &g : s) g *= scale;
    }
    double loss = 0.0;
    for (double l : losses) loss += l;
    return loss / n;
  }

 private:
  std::vector<ModelParams> buffers_;
};

bool AllFinite(ModelParams &params) {
  for (auto s : TensorSpans(params)) {
    for (double v : s) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

double BatchGradient(const ModelParams &params, std::span<const Utterance> batch,
                     ModelParams &grads, int num_threads) {
  if (batch.empty()) throw Error(ErrorKind::kInvalidConfig, "empty batch");
  GradientWorkspace ws(params, static_cast<int>(batch.size()));
  return ws.Compute(params, batch, grads, num_threads);
}

AdamOptimizer::AdamOptimizer(const ModelParams &params, double beta1, double beta2,
                             double epsilon)
    : m_(params.ZerosLike()), v_(params.ZerosLike()), beta1_(beta1), beta2_(beta2),
      epsilon_(epsilon) {}

void AdamOptimizer::Step(ModelParams &params, const ModelParams &grads, double learning_rate) {
  ++t_;
  auto p = TensorSpans(params);
  auto g = TensorSpans(const_cast<ModelParams &>(grads));
  auto m = TensorSpans(m_);
  auto v = TensorSpans(v_);
  if (p.size() != g.size() || p.size() != m.size()) {
    throw Error(ErrorKind::kShapeMismatch, "optimizer state does not match parameters");
  }
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = beta1_ * m[k][i] + (1.0 - beta1_) * gi;
      v[k][i] = beta2_ * v[k][i] + (1.0 - beta2_) * gi * gi;
      const double m_hat = m[k][i] / c1;
      const double v_hat = v[k][i] / c2;
      p[k][i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  }
}

DecodeResult DecodeCorpus(const ModelParams &params, std::span<const Utterance> utterances,
                          int max_symbols_per_frame) {
  DecodeResult result;
  std::int64_t errors = 0, tokens = 0;
  for (const Utterance &utt : utterances) {
    result.hyps.push_back(GreedyDecode(params, utt.x, max_symbols_per_frame));
    Alignment a = Align(utt.y, result.hyps.back());
    errors += a.errors();
    tokens += a.ref_length();
  }
  result.cer = tokens > 0 ? static_cast<double>(errors) / tokens : (errors > 0 ? 1.0 : 0.0);
  return result;
}

TrainResult Train(const ModelParams &init, std::span<const Utterance> train,
                  std::span<const Utterance> valid, const TrainConfig &config,
                  const EvalCallback &on_eval) {
  ValidateTrainConfig(config);
  if (train.empty()) throw Error(ErrorKind::kInvalidConfig, "empty training set");
  const std::span<const Utterance> eval_set = valid.empty() ? train : valid;

  TrainResult result;
  ModelParams params = init;
  ModelParams grads = params.ZerosLike();
  AdamOptimizer adam(params, config.beta1, config.beta2, config.epsilon);
  const int batch_size = std::min<int>(config.batch_size, static_cast<int>(train.size()));
  GradientWorkspace workspace(params, batch_size);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  std::vector<Utterance> batch;
  batch.reserve(batch_size);

  double loss_sum = 0.0;
  int loss_count = 0;

  auto evaluate = [&](int step) {
    EvalPoint point;
    point.step = step;
    point.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    point.valid_cer = DecodeCorpus(params, eval_set, config.max_symbols_per_frame).cer;
    loss_sum = 0.0;
    loss_count = 0;
    result.curve.push_back(point);
    if (on_eval) on_eval(point);

    auto better = [](const SavedCheckpoint &a, const SavedCheckpoint &b) {
      return a.valid_cer < b.valid_cer || (a.valid_cer == b.valid_cer && a.step < b.step);
    };
    SavedCheckpoint candidate{step, point.valid_cer, params};
    auto &best = result.best;
    if (static_cast<int>(best.size()) < config.n_checkpoints_to_average ||
        better(candidate, best.back())) {
      best.insert(std::upper_bound(best.begin(), best.end(), candidate, better),
                  std::move(candidate));
      if (static_cast<int>(best.size()) > config.n_checkpoints_to_average) best.pop_back();
    }
  };

  for (int step = 0; step < config.steps; ++step) {
    batch.clear();
    for (int b = 0; b < batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(train[order[cursor++]]);
    }
    double loss;
    try {
      loss = workspace.Compute(params, batch, grads, config.num_threads);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kNumericalUnderflow) throw;
      throw Error(ErrorKind::kDivergenceDetected,
                  "step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::kDivergenceDetected,
                  "step " + std::to_string(step) + ": loss is " + std::to_string(loss));
    }
    if (config.clip_norm > 0.0) {
      double norm2 = 0.0;
      for (auto s : TensorSpans(grads)) {
        for (double g : s) norm2 += g * g;
      }
      const double norm = std::sqrt(norm2);
      if (norm > config.clip_norm) {
        for (auto s : TensorSpans(grads)) {
          for (double &g : s) g *= config.clip_norm / norm;
        }
      }
    }
    adam.Step(params, grads, LearningRateAt(config, step));
    if (!AllFinite(params)) {
      throw Error(ErrorKind::kDivergenceDetected,
                  "step " + std::to_string(step) + ": parameters became non-finite");
    }
    loss_sum += loss;
    ++loss_count;
    if ((step + 1) % config.eval_interval == 0 && step + 1 != config.steps) evaluate(step + 1);
  }
  evaluate(config.steps);

  std::vector<ModelParams> chosen;
  for (const auto &c : result.best) chosen.push_back(c.params);
  result.averaged = AverageCheckpoints(chosen);
  result.last = std::move(params);
  return result;
}

ModelParams AverageCheckpoints(std::span<const ModelParams> checkpoints) {
  if (checkpoints.empty()) throw Error(ErrorKind::kInvalidConfig, "no checkpoints to average");
  for (const auto &c : checkpoints) {
    if (!c.SameStructure(checkpoints.front())) {
      throw Error(ErrorKind::kConfigMismatch, "checkpoints differ in structure or features");
    }
  }
  ModelParams mean = checkpoints.front();
  auto out = TensorSpans(mean);
  std::vector<std::vector<std::span<double>>> inputs;
  for (const auto &c : checkpoints) inputs.push_back(TensorSpans(const_cast<ModelParams &>(c)));
  const std::size_t k = checkpoints.size();
  std::vector<double> values(k);
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t i = 0; i < out[t].size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) values[c] = inputs[c][t][i];
      std::sort(values.begin(), values.end());
      if (values.front() == values.back()) {
        out[t][i] = values.front();
        continue;
      }
      double sum = 0.0;
      for (double v : values) sum += v;
      out[t][i] = sum / static_cast<double>(k);
    }
  }
  return mean;
}

}  // namespace pet
