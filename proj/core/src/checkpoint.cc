// pet/checkpoint.cc

#include "pet/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>

#include "json.hpp"
#include "pet/error.h"
#include "pet/text_utils.h"

namespace pet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'P', 'E', 'T', 'C', 'K', 'P', 'T', '\x01'};

json EmbeddingToJson(const ComposedEmbedding &emb) {
  json j;
  j["features"] = emb.features().ToString();
  json tokens = json::array();
  for (int v = 0; v < emb.vocab_size(); ++v) tokens.push_back(emb.TokenValues(v));
  j["token_values"] = std::move(tokens);
  return j;
}

ComposedEmbedding EmbeddingFromJson(const json &j, EmbeddingSide side,
                                    const std::vector<std::string> &vocab, int dim) {
  FeatureSet features;
  for (char letter : j.at("features").get<std::string>()) {
    auto f = FeatureFromLetter(letter);
    if (!f) throw Error(ErrorKind::kParse, "bad feature letter in checkpoint");
    features.Insert(*f);
  }
  const auto &tokens = j.at("token_values");
  if (tokens.size() != vocab.size()) {
    throw Error(ErrorKind::kParse, "token_values size does not match vocabulary");
  }
  std::vector<FeatureValues> values(vocab.size());
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    std::size_t k = 0;
    for (Feature f : kAllFeatures) {
      if (!features.Has(f)) continue;
      values[v][static_cast<int>(f)] = tokens[v].at(k++).get<std::string>();
    }
  }
  return ComposedEmbedding(side, features, vocab, values, dim);
}

void AllocateNetwork(ModelParams &p) {
  const auto &d = p.dims;
  const int outputs = p.vocab_size() + 1;
  p.encoder.w1.resize(d.encoder_dim, d.input_dim);
  p.encoder.b1.resize(d.encoder_dim, 1);
  p.encoder.w2.resize(d.encoder_dim, d.encoder_dim);
  p.encoder.b2.resize(d.encoder_dim, 1);
  if (d.encoder == EncoderKind::kRecurrent) {
    p.encoder.u1.resize(d.encoder_dim, d.encoder_dim);
    p.encoder.u2.resize(d.encoder_dim, d.encoder_dim);
  }
  p.decoder.start.resize(d.decoder_dim, 1);
  p.decoder.w.resize(d.decoder_dim, d.embed_dim);
  p.decoder.u.resize(d.decoder_dim, d.decoder_dim);
  p.decoder.b.resize(d.decoder_dim, 1);
  p.joiner.enc_proj.resize(d.embed_dim, d.encoder_dim);
  p.joiner.dec_proj.resize(d.embed_dim, d.decoder_dim);
  p.joiner.bias.resize(d.embed_dim, 1);
  p.joiner.out_bias.resize(outputs, 1);
}

}  // namespace

std::string SerializeCheckpoint(const ModelParams &params, const CheckpointMetadata &metadata) {
  json header;
  header["format"] = "pet-checkpoint";
  header["version"] = 1;
  header["dims"] = {{"input_dim", params.dims.input_dim},
                    {"encoder_dim", params.dims.encoder_dim},
                    {"embed_dim", params.dims.embed_dim},
                    {"decoder_dim", params.dims.decoder_dim},
                    {"encoder", std::string(EncoderKindName(params.dims.encoder))}};
  header["features"] = params.features.ToString();
  header["vocab"] = params.vocab;
  header["folded"] = params.folded();
  if (!params.folded()) {
    header["embedding"] = {{"decoder", EmbeddingToJson(params.decoder_embedding)},
                           {"joiner", EmbeddingToJson(params.joiner_embedding)}};
  }
  header["metadata"] = metadata;
  json tensors = json::array();
  std::size_t total = 0;
  params.ForEachTensor([&](const auto &name, const auto &t) {
    tensors.push_back({{"name", std::string(name)}, {"rows", t.rows()}, {"cols", t.cols()}});
    total += static_cast<std::size_t>(t.size());
  });
  header["tensors"] = std::move(tensors);

  const std::string text = header.dump();
  std::string out;
  out.reserve(16 + text.size() + total * sizeof(double));
  out.append(kMagic, sizeof(kMagic));
  const std::uint64_t n = text.size();
  out.append(reinterpret_cast<const char *>(&n), sizeof(n));
  out += text;
  params.ForEachTensor([&](const auto &, const auto &t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const double value = t(r, c);
        out.append(reinterpret_cast<const char *>(&value), sizeof(value));
      }
    }
  });
  return out;
}

ModelParams DeserializeCheckpoint(std::string_view bytes, CheckpointMetadata *metadata) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kParse, "not a pet checkpoint");
  }
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data() + 8, sizeof(n));
  if (n > bytes.size() - 16) throw Error(ErrorKind::kParse, "truncated checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(16, n));
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kParse, std::string("checkpoint header: ") + e.what());
  }

  ModelParams p;
  try {
    const auto &dims = header.at("dims");
    p.dims.input_dim = dims.at("input_dim").get<int>();
    p.dims.encoder_dim = dims.at("encoder_dim").get<int>();
    p.dims.embed_dim = dims.at("embed_dim").get<int>();
    p.dims.decoder_dim = dims.at("decoder_dim").get<int>();
    p.dims.encoder = ParseEncoderKind(dims.at("encoder").get<std::string>());
    p.features = ParseFeatureString(header.at("features").get<std::string>());
    p.vocab = header.at("vocab").get<std::vector<std::string>>();
    AllocateNetwork(p);
    if (header.at("folded").get<bool>()) {
      p.folded_decoder = FoldedTable{Eigen::MatrixXd(p.vocab_size(), p.dims.embed_dim)};
      p.folded_joiner = FoldedTable{Eigen::MatrixXd(p.vocab_size() + 1, p.dims.embed_dim)};
    } else {
      const auto &emb = header.at("embedding");
      p.decoder_embedding = EmbeddingFromJson(emb.at("decoder"), EmbeddingSide::kDecoder,
                                              p.vocab, p.dims.embed_dim);
      p.joiner_embedding = EmbeddingFromJson(emb.at("joiner"), EmbeddingSide::kJoiner,
                                             p.vocab, p.dims.embed_dim);
    }
    if (metadata != nullptr) {
      *metadata = header.at("metadata").get<CheckpointMetadata>();
    }
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kParse, std::string("checkpoint header: ") + e.what());
  }

  const auto &tensors = header.at("tensors");
  std::size_t index = 0;
  std::size_t offset = 16 + n;
  p.ForEachTensor([&](const auto &name, auto &t) {
    if (index >= tensors.size()) throw Error(ErrorKind::kParse, "missing tensor entries");
    const auto &entry = tensors[index++];
    if (entry.at("name").get<std::string>() != std::string(name) ||
        entry.at("rows").get<Eigen::Index>() != t.rows() ||
        entry.at("cols").get<Eigen::Index>() != t.cols()) {
      throw Error(ErrorKind::kParse, "tensor '" + std::string(name) + "' does not match header");
    }
    const std::size_t nbytes = static_cast<std::size_t>(t.size()) * sizeof(double);
    if (offset + nbytes > bytes.size()) throw Error(ErrorKind::kParse, "truncated tensor data");
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        double value;
        std::memcpy(&value, bytes.data() + offset, sizeof(value));
        t(r, c) = value;
        offset += sizeof(value);
      }
    }
  });
  if (index != tensors.size() || offset != bytes.size()) {
    throw Error(ErrorKind::kParse, "checkpoint has trailing tensors or bytes");
  }
  return p;
}

void SaveCheckpoint(const std::string &path, const ModelParams &params,
                    const CheckpointMetadata &metadata) {
  WriteFile(path, SerializeCheckpoint(params, metadata));
}

ModelParams LoadCheckpoint(const std::string &path, CheckpointMetadata *metadata) {
  return DeserializeCheckpoint(ReadFile(path), metadata);
}

}  // namespace pet
