// pet/embedding.cc

#include "pet/embedding.h"

#include <cmath>
#include <random>
#include <utility>

#include "pet/error.h"

namespace pet {

int FeatureEmbeddingTable::Row(std::string_view value) const {
  auto it = index.find(std::string(value));
  return it == index.end() ? -1 : it->second;
}

FeatureValues ResolveFeatureValues(const Lexicon &lex, std::string_view token) {
  FeatureValues values;
  values[static_cast<int>(Feature::kW)] = std::string(token);
  if (lex.Find(token) == nullptr) {
    for (Feature f : {Feature::kP, Feature::kC, Feature::kV, Feature::kT}) {
      values[static_cast<int>(f)] = std::string(kNoPron);
    }
    return values;
  }
  TokenFeatures tf = ExtractFeatures(lex, token);
  values[static_cast<int>(Feature::kP)] = tf.p;
  values[static_cast<int>(Feature::kC)] = tf.c;
  values[static_cast<int>(Feature::kV)] = tf.v;
  values[static_cast<int>(Feature::kT)] =
      tf.t ? std::to_string(*tf.t) : std::string(kNoPron);
  return values;
}

ComposedEmbedding::ComposedEmbedding(EmbeddingSide side, FeatureSet features,
                                     std::vector<std::string> vocab,
                                     const std::vector<FeatureValues> &token_values,
                                     int dim)
    : side_(side), features_(features), dim_(dim), vocab_(std::move(vocab)) {
  if (dim < 1) throw Error(ErrorKind::kInvalidConfig, "embedding dim must be >= 1");
  if (features.empty()) throw Error(ErrorKind::kInvalidConfig, "empty feature set");
  if (token_values.size() != vocab_.size()) {
    throw Error(ErrorKind::kShapeMismatch, "one feature-value set per token required");
  }
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!vocab_index_.emplace(vocab_[i], static_cast<int>(i)).second) {
      throw Error(ErrorKind::kInvalidConfig, "duplicate vocab token '" + vocab_[i] + "'");
    }
  }
  for (Feature f : kAllFeatures) {
    if (!features.Has(f)) continue;
    FeatureEmbeddingTable table;
    table.feature = f;
    for (const auto &values : token_values) {
      const std::string &value = values[static_cast<int>(f)];
      if (table.index.emplace(value, static_cast<int>(table.values.size())).second) {
        table.values.push_back(value);
      }
    }
    if (f != Feature::kW &&
        table.index.emplace(std::string(kNoPron), static_cast<int>(table.values.size()))
            .second) {
      table.values.emplace_back(kNoPron);
    }
    table.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.values.size()), dim);
    tables_.push_back(std::move(table));
  }
  token_rows_.resize(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    for (const auto &table : tables_) {
      token_rows_[i].push_back(table.Row(token_values[i][static_cast<int>(table.feature)]));
    }
  }
  if (side_ == EmbeddingSide::kJoiner) blank_row_ = Eigen::VectorXd::Zero(dim);
}

int ComposedEmbedding::TokenId(std::string_view token) const {
  auto it = vocab_index_.find(std::string(token));
  if (it == vocab_index_.end()) {
    throw Error(ErrorKind::kUnknownToken, "'" + std::string(token) + "' not in vocabulary");
  }
  return it->second;
}

const FeatureEmbeddingTable *ComposedEmbedding::Table(Feature f) const {
  for (const auto &t : tables_) {
    if (t.feature == f) return &t;
  }
  return nullptr;
}

FeatureEmbeddingTable *ComposedEmbedding::Table(Feature f) {
  for (auto &t : tables_) {
    if (t.feature == f) return &t;
  }
  return nullptr;
}

std::vector<std::string> ComposedEmbedding::TokenValues(int id) const {
  std::vector<std::string> values;
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    values.push_back(tables_[k].values[token_rows_[id][k]]);
  }
  return values;
}

ComposedEmbedding ComposedEmbedding::ZerosLike() const {
  ComposedEmbedding z = *this;
  for (auto &t : z.tables_) t.rows.setZero();
  z.blank_row_.setZero();
  return z;
}

Eigen::VectorXd ComposedEmbedding::ComposeId(int id) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  const auto &rows = token_rows_[id];
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    out += tables_[k].rows.row(rows[k]).transpose();
  }
  return out;
}

void ComposedEmbedding::AccumulateGradientId(int id,
                                             const Eigen::Ref<const Eigen::VectorXd> &grad) {
  const auto &rows = token_rows_[id];
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    tables_[k].rows.row(rows[k]) += grad.transpose();
  }
}

bool ComposedEmbedding::SameStructure(const ComposedEmbedding &other) const {
  if (side_ != other.side_ || features_ != other.features_ || dim_ != other.dim_ ||
      vocab_ != other.vocab_ || tables_.size() != other.tables_.size() ||
      token_rows_ != other.token_rows_ || blank_row_.size() != other.blank_row_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    if (tables_[k].feature != other.tables_[k].feature ||
        tables_[k].values != other.tables_[k].values) {
      return false;
    }
  }
  return true;
}

EmbeddingPair InitTables(const Lexicon &lex, const std::vector<std::string> &vocab,
                         const FeatureConfig &config, int dim, std::uint64_t seed) {
  ValidateFeatureConfig(config, lex.tonal());
  if (dim < 1) throw Error(ErrorKind::kInvalidConfig, "embedding dim must be >= 1");
  std::vector<FeatureValues> values;
  values.reserve(vocab.size());
  for (const auto &token : vocab) values.push_back(ResolveFeatureValues(lex, token));

  EmbeddingPair pair{
      ComposedEmbedding(EmbeddingSide::kDecoder, config.decoder, vocab, values, dim),
      ComposedEmbedding(EmbeddingSide::kJoiner, config.joiner, vocab, values, dim)};

  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (ComposedEmbedding *emb : {&pair.decoder, &pair.joiner}) {
    for (auto &table : emb->tables()) {
      for (Eigen::Index r = 0; r < table.rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < table.rows.cols(); ++c) table.rows(r, c) = uniform(rng);
      }
    }
    for (Eigen::Index c = 0; c < emb->blank_row().size(); ++c) emb->blank_row()(c) = uniform(rng);
  }
  return pair;
}

Eigen::VectorXd Compose(const ComposedEmbedding &emb, std::string_view token) {
  return emb.ComposeId(emb.TokenId(token));
}

FoldedTable Fold(const ComposedEmbedding &emb) {
  const bool joiner = emb.side() == EmbeddingSide::kJoiner;
  FoldedTable folded;
  folded.rows.resize(emb.vocab_size() + (joiner ? 1 : 0), emb.dim());
  for (int v = 0; v < emb.vocab_size(); ++v) folded.rows.row(v) = emb.ComposeId(v).transpose();
  if (joiner) folded.rows.row(emb.vocab_size()) = emb.blank_row().transpose();
  return folded;
}

void AccumulateGradient(ComposedEmbedding &grads, std::string_view token,
                        const Eigen::Ref<const Eigen::VectorXd> &grad) {
  if (grad.size() != grads.dim()) {
    throw Error(ErrorKind::kShapeMismatch, "gradient has wrong dimension");
  }
  grads.AccumulateGradientId(grads.TokenId(token), grad);
}

}  // namespace pet
