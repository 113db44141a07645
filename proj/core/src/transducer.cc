// pet/transducer.cc

#include "pet/transducer.h"

#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "pet/error.h"

namespace pet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void FillUniform(Eigen::MatrixXd &m, int rows, int cols, double bound,
                 std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> uniform(-bound, bound);
  m.resize(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform(rng);
  }
}

double FanIn(int n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

// Row-wise log-softmax in place.
void LogSoftmaxRows(Eigen::MatrixXd &m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    const double lse = mx + std::log((m.row(r).array() - mx).exp().sum());
    m.row(r).array() -= lse;
  }
}

void CheckInputs(const ModelParams &params, const AcousticSequence &x,
                 const TokenSequence &y) {
  if (x.num_frames() < 1) throw Error(ErrorKind::kShapeMismatch, "T must be >= 1");
  if (x.frames.cols() != params.dims.input_dim) {
    throw Error(ErrorKind::kShapeMismatch,
                "frame width " + std::to_string(x.frames.cols()) + " != input_dim " +
                    std::to_string(params.dims.input_dim));
  }
  for (int label : y) {
    if (label < 0 || label >= params.vocab_size()) {
      throw Error(ErrorKind::kShapeMismatch, "label " + std::to_string(label) +
                                                 " outside the vocabulary");
    }
  }
}

// Encoder outputs for every frame.
void RunEncoder(const ModelParams &params, const Eigen::MatrixXd &x,
                Eigen::MatrixXd &h1, Eigen::MatrixXd &h2) {
  const EncoderParams &enc = params.encoder;
  const Eigen::Index T = x.rows();
  if (params.dims.encoder == EncoderKind::kFeedForward) {
    h1 = ((x * enc.w1.transpose()).rowwise() + enc.b1.col(0).transpose()).array().tanh();
    h2 = ((h1 * enc.w2.transpose()).rowwise() + enc.b2.col(0).transpose()).array().tanh();
    return;
  }
  const Eigen::Index n = enc.b1.rows();
  h1.resize(T, n);
  h2.resize(T, n);
  Eigen::MatrixXd in1 = (x * enc.w1.transpose()).rowwise() + enc.b1.col(0).transpose();
  Eigen::VectorXd prev1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prev2 = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::VectorXd a1 = in1.row(t).transpose() + enc.u1 * prev1;
    prev1 = a1.array().tanh();
    h1.row(t) = prev1.transpose();
    Eigen::VectorXd a2 = enc.w2 * prev1 + enc.u2 * prev2 + enc.b2.col(0);
    prev2 = a2.array().tanh();
    h2.row(t) = prev2.transpose();
  }
}

Eigen::VectorXd DecoderStep(const DecoderParams &dec,
                            const Eigen::Ref<const Eigen::VectorXd> &embedding,
                            const Eigen::Ref<const Eigen::VectorXd> &prev) {
  Eigen::VectorXd a = dec.w * embedding + dec.u * prev + dec.b.col(0);
  return a.array().tanh();
}

}  // namespace

std::string_view EncoderKindName(EncoderKind kind) {
  return kind == EncoderKind::kRecurrent ? "recurrent" : "feedforward";
}

EncoderKind ParseEncoderKind(std::string_view name) {
  if (name == "recurrent") return EncoderKind::kRecurrent;
  if (name == "feedforward") return EncoderKind::kFeedForward;
  throw Error(ErrorKind::kInvalidConfig, "unknown encoder kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ModelParams

Eigen::MatrixXd ModelParams::DecoderTable() const {
  if (folded_decoder) return folded_decoder->rows;
  return Fold(decoder_embedding).rows;
}

Eigen::MatrixXd ModelParams::JoinerTable() const {
  if (folded_joiner) return folded_joiner->rows;
  return Fold(joiner_embedding).rows;
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams z = *this;
  z.ForEachTensor([](const auto &, auto &tensor) { tensor.setZero(); });
  return z;
}

std::int64_t ModelParams::NumParameters() const {
  std::int64_t n = 0;
  ForEachTensor([&n](const auto &, const auto &tensor) { n += tensor.size(); });
  return n;
}

bool ModelParams::SameStructure(const ModelParams &other) const {
  if (!(dims == other.dims) || !(features == other.features) || vocab != other.vocab ||
      folded() != other.folded()) {
    return false;
  }
  if (!folded() && (!decoder_embedding.SameStructure(other.decoder_embedding) ||
                    !joiner_embedding.SameStructure(other.joiner_embedding))) {
    return false;
  }
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  ForEachTensor([&](const auto &, const auto &t) { shapes.emplace_back(t.rows(), t.cols()); });
  std::size_t i = 0;
  bool same = true;
  other.ForEachTensor([&](const auto &, const auto &t) {
    if (i >= shapes.size() || shapes[i] != std::pair(t.rows(), t.cols())) same = false;
    ++i;
  });
  return same && i == shapes.size();
}

ModelParams InitModel(const Lexicon &lex, const std::vector<std::string> &vocab,
                      const FeatureConfig &features, const ModelDims &dims,
                      std::uint64_t seed) {
  if (dims.input_dim < 1 || dims.encoder_dim < 1 || dims.embed_dim < 1 ||
      dims.decoder_dim < 1) {
    throw Error(ErrorKind::kInvalidConfig, "model dimensions must be >= 1");
  }
  if (vocab.empty()) throw Error(ErrorKind::kInvalidConfig, "empty vocabulary");
  ModelParams p;
  p.dims = dims;
  p.features = features;
  p.vocab = vocab;
  EmbeddingPair emb = InitTables(lex, vocab, features, dims.embed_dim, seed);
  p.decoder_embedding = std::move(emb.decoder);
  p.joiner_embedding = std::move(emb.joiner);

  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  const int in = dims.input_dim, enc = dims.encoder_dim, d = dims.embed_dim,
            dec = dims.decoder_dim, outputs = static_cast<int>(vocab.size()) + 1;
  FillUniform(p.encoder.w1, enc, in, FanIn(in), rng);
  FillUniform(p.encoder.b1, enc, 1, FanIn(in), rng);
  FillUniform(p.encoder.w2, enc, enc, FanIn(enc), rng);
  FillUniform(p.encoder.b2, enc, 1, FanIn(enc), rng);
  if (dims.encoder == EncoderKind::kRecurrent) {
    FillUniform(p.encoder.u1, enc, enc, FanIn(enc), rng);
    FillUniform(p.encoder.u2, enc, enc, FanIn(enc), rng);
  }
  p.decoder.start = Eigen::MatrixXd::Zero(dec, 1);
  FillUniform(p.decoder.w, dec, d, FanIn(d), rng);
  FillUniform(p.decoder.u, dec, dec, FanIn(dec), rng);
  FillUniform(p.decoder.b, dec, 1, FanIn(dec), rng);
  FillUniform(p.joiner.enc_proj, d, enc, FanIn(enc), rng);
  FillUniform(p.joiner.dec_proj, d, dec, FanIn(dec), rng);
  FillUniform(p.joiner.bias, d, 1, FanIn(enc), rng);
  p.joiner.out_bias = Eigen::MatrixXd::Zero(outputs, 1);
  return p;
}

ModelParams FoldModel(const ModelParams &params) {
  if (params.folded()) return params;
  ModelParams out = params;
  out.folded_decoder = Fold(params.decoder_embedding);
  out.folded_joiner = Fold(params.joiner_embedding);
  out.decoder_embedding = ComposedEmbedding();
  out.joiner_embedding = ComposedEmbedding();
  return out;
}

// ---------------------------------------------------------------------------
// Lattice and loss

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

Lattice::Lattice(Eigen::MatrixXd log_probs, TokenSequence labels, int num_frames)
    : log_probs_(std::move(log_probs)), labels_(std::move(labels)), num_frames_(num_frames) {
  const int T = num_frames_, U = this->U();
  if (T < 1) throw Error(ErrorKind::kShapeMismatch, "T must be >= 1");
  if (log_probs_.rows() != static_cast<Eigen::Index>(T) * (U + 1) || log_probs_.cols() < 2) {
    throw Error(ErrorKind::kShapeMismatch, "log_probs must be [T*(U+1), V+1]");
  }
  for (int label : labels_) {
    if (label < 0 || label >= blank()) {
      throw Error(ErrorKind::kShapeMismatch, "label outside the vocabulary");
    }
  }
  const int b = blank();
  alpha_.setConstant(T, U + 1, kNegInf);
  alpha_(0, 0) = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kNegInf;
      if (t > 0) a = alpha_(t - 1, u) + LogProb(t - 1, u, b);
      if (u > 0) a = LogAdd(a, alpha_(t, u - 1) + LogProb(t, u - 1, labels_[u - 1]));
      alpha_(t, u) = a;
    }
  }
  beta_.setConstant(T, U + 1, kNegInf);
  beta_(T - 1, U) = LogProb(T - 1, U, b);
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      double v = kNegInf;
      if (t < T - 1) v = beta_(t + 1, u) + LogProb(t, u, b);
      if (u < U) v = LogAdd(v, beta_(t, u + 1) + LogProb(t, u, labels_[u]));
      beta_(t, u) = v;
    }
  }
}

double Lattice::ForwardLogLikelihood() const {
  return alpha_(T() - 1, U()) + LogProb(T() - 1, U(), blank());
}

LossResult TransducerLoss(const Lattice &lattice) {
  if (!lattice.log_probs().allFinite()) {
    throw Error(ErrorKind::kNumericalUnderflow, "lattice holds non-finite log-probabilities");
  }
  const int T = lattice.T(), U = lattice.U(), b = lattice.blank();
  const double log_z = lattice.ForwardLogLikelihood();
  if (!std::isfinite(log_z)) {
    throw Error(ErrorKind::kNumericalUnderflow, "total log-likelihood is not finite");
  }
  const auto &alpha = lattice.alpha();
  const auto &beta = lattice.beta();
  LossResult result;
  result.loss = -log_z;
  result.grad = Eigen::MatrixXd::Zero(lattice.log_probs().rows(), lattice.log_probs().cols());
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const Eigen::Index cell = lattice.Cell(t, u);
      if (t < T - 1) {
        result.grad(cell, b) =
            -std::exp(alpha(t, u) + lattice.LogProb(t, u, b) + beta(t + 1, u) - log_z);
      } else if (u == U) {
        result.grad(cell, b) = -std::exp(alpha(t, u) + lattice.LogProb(t, u, b) - log_z);
      }
      if (u < U) {
        const int y = lattice.labels()[u];
        result.grad(cell, y) =
            -std::exp(alpha(t, u) + lattice.LogProb(t, u, y) + beta(t, u + 1) - log_z);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Forward / backward

Lattice ForwardLattice(const ModelParams &params, const AcousticSequence &x,
                       const TokenSequence &y, ForwardCache *cache) {
  CheckInputs(params, x, y);
  ForwardCache local;
  ForwardCache &c = cache != nullptr ? *cache : local;
  const int T = x.num_frames(), U = static_cast<int>(y.size());

  c.x = x.frames;
  c.labels = y;
  RunEncoder(params, x.frames, c.enc_h1, c.enc_h2);

  const Eigen::MatrixXd dec_table = params.DecoderTable();
  c.dec_emb.resize(U, params.dims.embed_dim);
  c.dec_g.resize(U + 1, params.dims.decoder_dim);
  c.dec_g.row(0) = params.decoder.start.col(0).transpose();
  for (int u = 1; u <= U; ++u) {
    c.dec_emb.row(u - 1) = dec_table.row(y[u - 1]);
    c.dec_g.row(u) = DecoderStep(params.decoder, dec_table.row(y[u - 1]).transpose(),
                                 c.dec_g.row(u - 1).transpose())
                         .transpose();
  }

  const Eigen::MatrixXd enc_part = c.enc_h2 * params.joiner.enc_proj.transpose();
  Eigen::MatrixXd dec_part = c.dec_g * params.joiner.dec_proj.transpose();
  dec_part.rowwise() += params.joiner.bias.col(0).transpose();
  c.join_z.resize(static_cast<Eigen::Index>(T) * (U + 1), params.dims.embed_dim);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      c.join_z.row(static_cast<Eigen::Index>(t) * (U + 1) + u) =
          (enc_part.row(t) + dec_part.row(u)).array().tanh();
    }
  }
  c.join_table = params.JoinerTable();
  c.log_probs.noalias() = c.join_z * c.join_table.transpose();
  c.log_probs.rowwise() += params.joiner.out_bias.col(0).transpose();
  LogSoftmaxRows(c.log_probs);
  return Lattice(c.log_probs, y, T);
}

void BackwardAccumulate(const ModelParams &params, const ForwardCache &c,
                        const Eigen::MatrixXd &lattice_grad, ModelParams &grads) {
  if (lattice_grad.rows() != c.log_probs.rows() || lattice_grad.cols() != c.log_probs.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "lattice gradient shape");
  }
  const int T = static_cast<int>(c.x.rows()), U = static_cast<int>(c.labels.size());
  const int V = params.vocab_size();

  // Through log-softmax: dlogits = g - softmax * sum(g).
  Eigen::MatrixXd dlogits = lattice_grad;
  const Eigen::VectorXd row_sums = lattice_grad.rowwise().sum();
  dlogits -= (c.log_probs.array().exp().colwise() * row_sums.array()).matrix();

  // Output projection (the joiner table) and its bias.
  const Eigen::MatrixXd d_table = dlogits.transpose() * c.join_z;  // [V + 1, d]
  grads.joiner.out_bias.col(0) += dlogits.colwise().sum().transpose();
  if (grads.folded()) {
    grads.folded_joiner->rows += d_table;
  } else {
    for (int v = 0; v < V; ++v) {
      grads.joiner_embedding.AccumulateGradientId(v, d_table.row(v).transpose());
    }
    grads.joiner_embedding.blank_row() += d_table.row(V).transpose();
  }

  const Eigen::MatrixXd d_pre =
      ((dlogits * c.join_table).array() * (1.0 - c.join_z.array().square())).matrix();
  grads.joiner.bias.col(0) += d_pre.colwise().sum().transpose();
  Eigen::MatrixXd d_enc_part = Eigen::MatrixXd::Zero(T, d_pre.cols());
  Eigen::MatrixXd d_dec_part = Eigen::MatrixXd::Zero(U + 1, d_pre.cols());
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const auto row = d_pre.row(static_cast<Eigen::Index>(t) * (U + 1) + u);
      d_enc_part.row(t) += row;
      d_dec_part.row(u) += row;
    }
  }
  grads.joiner.enc_proj += d_enc_part.transpose() * c.enc_h2;
  grads.joiner.dec_proj += d_dec_part.transpose() * c.dec_g;
  Eigen::MatrixXd d_h2 = d_enc_part * params.joiner.enc_proj;  // [T, d_enc]
  Eigen::MatrixXd d_g = d_dec_part * params.joiner.dec_proj;   // [U + 1, d_dec]

  // Decoder, back through the emitted-token history.
  const DecoderParams &dec = params.decoder;
  for (int u = U; u >= 1; --u) {
    const Eigen::VectorXd g = c.dec_g.row(u).transpose();
    const Eigen::VectorXd da = d_g.row(u).transpose().array() * (1.0 - g.array().square());
    grads.decoder.w += da * c.dec_emb.row(u - 1);
    grads.decoder.u += da * c.dec_g.row(u - 1);
    grads.decoder.b.col(0) += da;
    const Eigen::VectorXd d_emb = dec.w.transpose() * da;
    if (grads.folded()) {
      grads.folded_decoder->rows.row(c.labels[u - 1]) += d_emb.transpose();
    } else {
      grads.decoder_embedding.AccumulateGradientId(c.labels[u - 1], d_emb);
    }
    d_g.row(u - 1) += (dec.u.transpose() * da).transpose();
  }
  grads.decoder.start.col(0) += d_g.row(0).transpose();

  // Encoder.
  const EncoderParams &enc = params.encoder;
  if (params.dims.encoder == EncoderKind::kFeedForward) {
    const Eigen::MatrixXd da2 = (d_h2.array() * (1.0 - c.enc_h2.array().square())).matrix();
    grads.encoder.w2 += da2.transpose() * c.enc_h1;
    grads.encoder.b2.col(0) += da2.colwise().sum().transpose();
    const Eigen::MatrixXd da1 =
        ((da2 * enc.w2).array() * (1.0 - c.enc_h1.array().square())).matrix();
    grads.encoder.w1 += da1.transpose() * c.x;
    grads.encoder.b1.col(0) += da1.colwise().sum().transpose();
    return;
  }
  const Eigen::Index n = enc.b1.rows();
  Eigen::VectorXd carry1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd carry2 = Eigen::VectorXd::Zero(n);
  for (int t = T - 1; t >= 0; --t) {
    const Eigen::VectorXd h2 = c.enc_h2.row(t).transpose();
    const Eigen::VectorXd h1 = c.enc_h1.row(t).transpose();
    const Eigen::VectorXd da2 =
        (d_h2.row(t).transpose() + carry2).array() * (1.0 - h2.array().square());
    grads.encoder.w2 += da2 * h1.transpose();
    grads.encoder.b2.col(0) += da2;
    if (t > 0) grads.encoder.u2 += da2 * c.enc_h2.row(t - 1);
    carry2 = enc.u2.transpose() * da2;
    const Eigen::VectorXd da1 =
        (enc.w2.transpose() * da2 + carry1).array() * (1.0 - h1.array().square());
    grads.encoder.w1 += da1 * c.x.row(t);
    grads.encoder.b1.col(0) += da1;
    if (t > 0) grads.encoder.u1 += da1 * c.enc_h1.row(t - 1);
    carry1 = enc.u1.transpose() * da1;
  }
}

ModelParams Backward(const ModelParams &params, const ForwardCache &cache,
                     const Eigen::MatrixXd &lattice_grad) {
  ModelParams grads = params.ZerosLike();
  BackwardAccumulate(params, cache, lattice_grad, grads);
  return grads;
}

double LossAndGradient(const ModelParams &params, const AcousticSequence &x,
                       const TokenSequence &y, ModelParams *grads) {
  ForwardCache cache;
  Lattice lattice = ForwardLattice(params, x, y, &cache);
  LossResult loss = TransducerLoss(lattice);
  if (grads != nullptr) BackwardAccumulate(params, cache, loss.grad, *grads);
  return loss.loss;
}

// ---------------------------------------------------------------------------
// Greedy decoding

TokenSequence GreedyDecode(const ModelParams &params, const AcousticSequence &x,
                           int max_symbols_per_frame) {
  CheckInputs(params, x, {});
  if (max_symbols_per_frame < 1) {
    throw Error(ErrorKind::kInvalidConfig, "max_symbols_per_frame must be >= 1");
  }
  Eigen::MatrixXd h1, h2;
  RunEncoder(params, x.frames, h1, h2);
  const Eigen::MatrixXd enc_part = h2 * params.joiner.enc_proj.transpose();
  const Eigen::MatrixXd dec_table = params.DecoderTable();
  const Eigen::MatrixXd join_table = params.JoinerTable();
  const int blank = params.blank();

  Eigen::VectorXd g = params.decoder.start.col(0);
  Eigen::VectorXd dec_part = params.joiner.dec_proj * g + params.joiner.bias.col(0);
  TokenSequence out;
  for (int t = 0; t < x.num_frames(); ++t) {
    for (int emitted = 0; emitted < max_symbols_per_frame; ++emitted) {
      const Eigen::VectorXd z = (enc_part.row(t).transpose() + dec_part).array().tanh();
      const Eigen::VectorXd logits = join_table * z + params.joiner.out_bias.col(0);
      int best = 0;
      for (int k = 1; k < logits.size(); ++k) {
        if (logits(k) > logits(best)) best = k;
      }
      if (best == blank) break;
      out.push_back(best);
      g = DecoderStep(params.decoder, dec_table.row(best).transpose(), g);
      dec_part = params.joiner.dec_proj * g + params.joiner.bias.col(0);
    }
  }
  return out;
}

}  // namespace pet
