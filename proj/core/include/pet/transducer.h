// pet/transducer.h
//
// A small neural transducer: encoder over acoustic frames, recurrent decoder
// over the composed embeddings of previously emitted tokens, and an additive
// joiner whose output projection is the composed joiner table [V + 1, d]
// (blank is id V, the last row). Training uses the exact lattice loss summed
// over every monotonic alignment; inference uses frame-synchronous greedy
// decoding.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pet/embedding.h"
#include "pet/feature_config.h"
#include "pet/lexicon.h"

namespace pet {

struct AcousticSequence {
  Eigen::MatrixXd frames;  // [T, d_in]

  int num_frames() const { return static_cast<int>(frames.rows()); }
};

// Vocabulary ids in [0, V); blank never appears in a target.
using TokenSequence = std::vector<int>;

enum class EncoderKind : std::uint8_t { kRecurrent, kFeedForward };

std::string_view EncoderKindName(EncoderKind kind);
// Throws InvalidConfig.
EncoderKind ParseEncoderKind(std::string_view name);

struct ModelDims {
  int input_dim = 16;
  int encoder_dim = 48;
  int embed_dim = 32;  // d: embedding tables and joiner hidden layer
  int decoder_dim = 48;
  EncoderKind encoder = EncoderKind::kRecurrent;

  bool operator==(const ModelDims &) const = default;
};

// Two tanh layers. The recurrent kind adds hidden-to-hidden weights u1, u2;
// the feed-forward kind leaves them empty and sees one frame at a time.
struct EncoderParams {
  Eigen::MatrixXd w1, u1, b1;
  Eigen::MatrixXd w2, u2, b2;
};

// g_0 = start, g_u = tanh(w e(y_u) + u g_{u-1} + b).
struct DecoderParams {
  Eigen::MatrixXd start, w, u, b;
};

// z = tanh(enc_proj h_t + dec_proj g_u + bias); logits = J z + out_bias.
struct JoinerParams {
  Eigen::MatrixXd enc_proj, dec_proj, bias, out_bias;
};

struct ModelParams {
  ModelDims dims;
  FeatureConfig features;
  std::vector<std::string> vocab;

  EncoderParams encoder;
  DecoderParams decoder;
  JoinerParams joiner;

  // Per-feature tables; default-constructed once the model is folded.
  ComposedEmbedding decoder_embedding;
  ComposedEmbedding joiner_embedding;
  // Precomputed final tables, present only on folded models.
  std::optional<FoldedTable> folded_decoder;
  std::optional<FoldedTable> folded_joiner;

  int vocab_size() const { return static_cast<int>(vocab.size()); }
  int blank() const { return vocab_size(); }
  bool folded() const { return folded_decoder.has_value(); }

  // Final embedding tables used by the network: [V, d] and [V + 1, d].
  Eigen::MatrixXd DecoderTable() const;
  Eigen::MatrixXd JoinerTable() const;

  // Visits every trainable tensor in a fixed order. `fn(name, tensor)`
  // receives an Eigen::MatrixXd& or Eigen::VectorXd&.
  template <typename Fn>
  void ForEachTensor(Fn &&fn);
  template <typename Fn>
  void ForEachTensor(Fn &&fn) const;

  ModelParams ZerosLike() const;
  std::int64_t NumParameters() const;
  // Same dims, features, vocab and tensor shapes.
  bool SameStructure(const ModelParams &other) const;
};

// Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)]; embedding rows per
// InitTables. Deterministic in `seed`.
ModelParams InitModel(const Lexicon &lex, const std::vector<std::string> &vocab,
                      const FeatureConfig &features, const ModelDims &dims,
                      std::uint64_t seed);

// Replaces the per-feature tables with their folded final tables.
ModelParams FoldModel(const ModelParams &params);

class Lattice {
 public:
  Lattice() = default;
  // `log_probs` is [T * (U + 1), V + 1], row t * (U + 1) + u. Computes the
  // forward and backward log-probabilities.
  Lattice(Eigen::MatrixXd log_probs, TokenSequence labels, int num_frames);

  int T() const { return num_frames_; }
  int U() const { return static_cast<int>(labels_.size()); }
  int num_outputs() const { return static_cast<int>(log_probs_.cols()); }
  int blank() const { return num_outputs() - 1; }
  const TokenSequence &labels() const { return labels_; }

  Eigen::Index Cell(int t, int u) const { return static_cast<Eigen::Index>(t) * (U() + 1) + u; }
  double LogProb(int t, int u, int k) const { return log_probs_(Cell(t, u), k); }
  const Eigen::MatrixXd &log_probs() const { return log_probs_; }

  const Eigen::MatrixXd &alpha() const { return alpha_; }  // [T, U + 1]
  const Eigen::MatrixXd &beta() const { return beta_; }    // [T, U + 1]
  double ForwardLogLikelihood() const;
  double BackwardLogLikelihood() const { return beta_(0, 0); }

 private:
  Eigen::MatrixXd log_probs_;
  TokenSequence labels_;
  int num_frames_ = 0;
  Eigen::MatrixXd alpha_, beta_;
};

double LogAdd(double a, double b);

struct ForwardCache {
  Eigen::MatrixXd x;             // [T, d_in]
  TokenSequence labels;
  Eigen::MatrixXd enc_h1, enc_h2;  // [T, d_enc]
  Eigen::MatrixXd dec_emb;       // [U, d]
  Eigen::MatrixXd dec_g;         // [U + 1, d_dec]
  Eigen::MatrixXd join_z;        // [T * (U + 1), d]
  Eigen::MatrixXd join_table;    // [V + 1, d]
  Eigen::MatrixXd log_probs;     // [T * (U + 1), V + 1]
};

// Throws ShapeMismatch on empty input, wrong frame width or an out-of-range
// label.
Lattice ForwardLattice(const ModelParams &params, const AcousticSequence &x,
                       const TokenSequence &y, ForwardCache *cache = nullptr);

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d loss / d log_probs, same shape as log_probs
};

// Negative log of the total probability of all alignments. Throws
// NumericalUnderflow when the lattice holds non-finite values.
LossResult TransducerLoss(const Lattice &lattice);

// Back-propagates `lattice_grad` (d loss / d log_probs) into every parameter
// and adds the result to `grads`.
void BackwardAccumulate(const ModelParams &params, const ForwardCache &cache,
                        const Eigen::MatrixXd &lattice_grad, ModelParams &grads);
ModelParams Backward(const ModelParams &params, const ForwardCache &cache,
                     const Eigen::MatrixXd &lattice_grad);

// Forward, loss and backward for one utterance; gradients are added to
// `grads` when non-null. Returns the loss.
double LossAndGradient(const ModelParams &params, const AcousticSequence &x,
                       const TokenSequence &y, ModelParams *grads);

// At each frame, emit the argmax symbol while it is not blank (at most
// `max_symbols_per_frame` per frame), feeding each emission back through the
// decoder. Ties go to the lowest id.
TokenSequence GreedyDecode(const ModelParams &params, const AcousticSequence &x,
                           int max_symbols_per_frame = 4);

// ---------------------------------------------------------------------------

template <typename Fn>
void ModelParams::ForEachTensor(Fn &&fn) {
  fn("encoder.w1", encoder.w1);
  if (dims.encoder == EncoderKind::kRecurrent) fn("encoder.u1", encoder.u1);
  fn("encoder.b1", encoder.b1);
  fn("encoder.w2", encoder.w2);
  if (dims.encoder == EncoderKind::kRecurrent) fn("encoder.u2", encoder.u2);
  fn("encoder.b2", encoder.b2);
  fn("decoder.start", decoder.start);
  fn("decoder.w", decoder.w);
  fn("decoder.u", decoder.u);
  fn("decoder.b", decoder.b);
  fn("joiner.enc_proj", joiner.enc_proj);
  fn("joiner.dec_proj", joiner.dec_proj);
  fn("joiner.bias", joiner.bias);
  fn("joiner.out_bias", joiner.out_bias);
  if (folded()) {
    fn("embedding.decoder.folded", folded_decoder->rows);
    fn("embedding.joiner.folded", folded_joiner->rows);
    return;
  }
  for (auto &table : decoder_embedding.tables()) {
    fn(std::string("embedding.decoder.") + FeatureLetter(table.feature), table.rows);
  }
  for (auto &table : joiner_embedding.tables()) {
    fn(std::string("embedding.joiner.") + FeatureLetter(table.feature), table.rows);
  }
  fn("embedding.joiner.blank", joiner_embedding.blank_row());
}

template <typename Fn>
void ModelParams::ForEachTensor(Fn &&fn) const {
  const_cast<ModelParams *>(this)->ForEachTensor(
      [&fn](const auto &name, auto &tensor) { fn(name, std::as_const(tensor)); });
}

}  // namespace pet
