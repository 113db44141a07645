// pet/embedding.h
//
// Pronunciation-aware token embeddings. Every selected feature owns its own
// table; the final embedding of a token is the plain sum of the rows its
// feature values select:
//
//   E_final(v) = sum_{f in F} E_f(f(v))
//
// Tokens whose selected feature values coincide (homophones under a config
// without W) therefore share their final embedding exactly. The joiner side
// additionally owns an independent blank row, appended last when folded.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pet/feature_config.h"
#include "pet/lexicon.h"

namespace pet {

// Feature value given to P/C/V/T for tokens the lexicon does not cover
// (punctuation, digits). Never collides with a real value: pronunciations are
// letters only and tones are integers.
inline constexpr std::string_view kNoPron = "<nopron>";

enum class EmbeddingSide : std::uint8_t { kDecoder, kJoiner };

struct FeatureEmbeddingTable {
  Feature feature = Feature::kW;
  std::vector<std::string> values;  // row id -> feature value
  std::unordered_map<std::string, int> index;
  Eigen::MatrixXd rows;  // [values.size(), d]

  // -1 when the value has no row.
  int Row(std::string_view value) const;
};

// Feature value strings of one token, indexed by Feature.
using FeatureValues = std::array<std::string, kAllFeatures.size()>;

// Resolves every feature value of `token`; tokens absent from the lexicon
// receive kNoPron for P, C, V and T.
FeatureValues ResolveFeatureValues(const Lexicon &lex, std::string_view token);

class ComposedEmbedding {
 public:
  ComposedEmbedding() = default;
  // Builds zero-initialized tables with one row per observed feature value
  // (plus the kNoPron fallback row for every feature except W).
  ComposedEmbedding(EmbeddingSide side, FeatureSet features,
                    std::vector<std::string> vocab,
                    const std::vector<FeatureValues> &token_values, int dim);

  EmbeddingSide side() const { return side_; }
  FeatureSet features() const { return features_; }
  int dim() const { return dim_; }
  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string> &vocab() const { return vocab_; }

  // Throws UnknownToken.
  int TokenId(std::string_view token) const;

  std::vector<FeatureEmbeddingTable> &tables() { return tables_; }
  const std::vector<FeatureEmbeddingTable> &tables() const { return tables_; }
  const FeatureEmbeddingTable *Table(Feature f) const;
  FeatureEmbeddingTable *Table(Feature f);

  // Row ids selected by token `id`, one per table, in table order.
  const std::vector<int> &TokenRows(int id) const { return token_rows_[id]; }
  // Feature values of token `id`, one per table, in table order.
  std::vector<std::string> TokenValues(int id) const;

  // Empty on the decoder side.
  Eigen::VectorXd &blank_row() { return blank_row_; }
  const Eigen::VectorXd &blank_row() const { return blank_row_; }

  // Same structure, every row zero; used as a gradient buffer.
  ComposedEmbedding ZerosLike() const;

  Eigen::VectorXd ComposeId(int id) const;
  void AccumulateGradientId(int id, const Eigen::Ref<const Eigen::VectorXd> &grad);

  bool SameStructure(const ComposedEmbedding &other) const;

 private:
  EmbeddingSide side_ = EmbeddingSide::kDecoder;
  FeatureSet features_;
  int dim_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> vocab_index_;
  std::vector<FeatureEmbeddingTable> tables_;
  std::vector<std::vector<int>> token_rows_;
  Eigen::VectorXd blank_row_;
};

struct EmbeddingPair {
  ComposedEmbedding decoder;
  ComposedEmbedding joiner;
};

// Rows are drawn from a uniform distribution on [-1/sqrt(d), 1/sqrt(d)],
// deterministic in `seed`. Throws InvalidConfig for a tone feature on a
// non-tonal lexicon, a joiner without W, duplicate vocab tokens or d < 1.
EmbeddingPair InitTables(const Lexicon &lex, const std::vector<std::string> &vocab,
                         const FeatureConfig &config, int dim, std::uint64_t seed);

// Throws UnknownToken.
Eigen::VectorXd Compose(const ComposedEmbedding &emb, std::string_view token);

struct FoldedTable {
  // [V, d] for the decoder, [V + 1, d] for the joiner (blank row last).
  Eigen::MatrixXd rows;
};

FoldedTable Fold(const ComposedEmbedding &emb);

// Adds `grad` to the row of every selected feature of `token` in `grads`,
// which must share the structure of the embedding being differentiated.
// Throws UnknownToken.
void AccumulateGradient(ComposedEmbedding &grads, std::string_view token,
                        const Eigen::Ref<const Eigen::VectorXd> &grad);

}  // namespace pet
