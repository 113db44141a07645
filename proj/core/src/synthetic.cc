// pet/synthetic.cc

#include "pet/synthetic.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "pet/error.h"
#include "pet/text_utils.h"

namespace pet {

namespace {

// Onsets and rhymes the synthetic syllables are spelled from. The empty
// onset gives vowel-initial syllables.
const std::vector<std::string> kOnsets = {"", "b", "d", "g", "zh", "sh", "m", "l", "k", "ch"};
const std::vector<std::string> kRhymes = {"a", "an", "ang", "e", "en", "i",
                                          "o", "ou", "u", "ai", "ao", "eng"};

std::string EncodeUtf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

int OnsetCount(int n_pron) {
  int nc = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_pron))));
  return std::clamp(nc, 2, static_cast<int>(kOnsets.size()));
}

Eigen::VectorXd GaussianVector(int n, double scale, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

}  // namespace

void ValidateSpec(const SyntheticTaskSpec &s) {
  auto fail = [](const std::string &why) { throw Error(ErrorKind::kInvalidSpec, why); };
  if (s.vocab_size < 2) fail("vocab_size must be >= 2");
  if (s.n_pronunciations < 1 || s.n_pronunciations >= s.vocab_size) {
    fail("n_pronunciations must be in [1, vocab_size)");
  }
  const int nc = OnsetCount(s.n_pronunciations);
  if (s.n_pronunciations > nc * static_cast<int>(kRhymes.size())) {
    fail("n_pronunciations exceeds the syllable inventory");
  }
  if (s.tone_count < 0 || s.tone_count > 5) fail("tone_count must be in [0, 5]");
  if (s.min_frames_per_token < 1 || s.max_frames_per_token < s.min_frames_per_token) {
    fail("frames_per_token range must be positive and ordered");
  }
  if (s.feature_dim < 1) fail("feature_dim must be >= 1");
  if (!(s.noise_std >= 0.0) || !(s.consonant_weight >= 0.0) || !(s.onset_strength >= 0.0)) {
    fail("noise_std, consonant_weight and onset_strength must be >= 0");
  }
  if (s.min_tokens < 1 || s.max_tokens < s.min_tokens) {
    fail("token-count range must be positive and ordered");
  }
  if (s.branching < 1 || s.branching > s.n_pronunciations) {
    fail("branching must be in [1, n_pronunciations]");
  }
  if (!(s.context_noise >= 0.0 && s.context_noise <= 1.0)) fail("context_noise must be in [0, 1]");
}

Lexicon SyntheticLexicon(const SyntheticTaskSpec &spec, std::vector<std::string> *vocab) {
  ValidateSpec(spec);
  const int nc = OnsetCount(spec.n_pronunciations);
  std::vector<LexiconEntry> entries;
  std::vector<std::string> tokens;
  for (int v = 0; v < spec.vocab_size; ++v) {
    const int p = v % spec.n_pronunciations;
    const int variant = v / spec.n_pronunciations;
    LexiconEntry e;
    e.token = EncodeUtf8(0x4E00 + static_cast<char32_t>(v));
    e.pron = kOnsets[p % nc] + kRhymes[p / nc];
    // Pairs of homophones share a tone, so tone only partly disambiguates.
    if (spec.tone_count > 0) e.tone = 1 + (variant / 2 + p) % spec.tone_count;
    tokens.push_back(e.token);
    entries.push_back(std::move(e));
  }
  ConsonantInventory inventory(kOnsets.begin() + 1, kOnsets.begin() + nc);
  if (vocab != nullptr) *vocab = std::move(tokens);
  return Lexicon(std::move(entries), std::move(inventory));
}

SyntheticDataset GenerateDataset(const SyntheticTaskSpec &spec, int n_utterances) {
  if (n_utterances < 0) throw Error(ErrorKind::kInvalidSpec, "n_utterances must be >= 0");
  SyntheticDataset data;
  data.lexicon = SyntheticLexicon(spec, &data.vocab);
  const int V = spec.vocab_size, n_pron = spec.n_pronunciations, d = spec.feature_dim;
  const int nc = OnsetCount(n_pron);

  std::mt19937_64 rng(spec.seed);

  // Acoustic prototypes: onset part, rhyme part, optional tone part.
  std::vector<Eigen::VectorXd> onset_proto, rhyme_proto, tone_proto;
  for (int i = 0; i < nc; ++i) onset_proto.push_back(GaussianVector(d, 1.0, rng));
  for (std::size_t i = 0; i < kRhymes.size(); ++i) rhyme_proto.push_back(GaussianVector(d, 1.0, rng));
  for (int i = 0; i < spec.tone_count; ++i) tone_proto.push_back(GaussianVector(d, 0.5, rng));
  const Eigen::VectorXd onset_marker = GaussianVector(d, 1.0, rng);

  std::vector<Eigen::VectorXd> pron_proto;
  for (int p = 0; p < n_pron; ++p) {
    pron_proto.push_back(spec.consonant_weight * onset_proto[p % nc] + rhyme_proto[p / nc]);
  }

  // Bigram successors for every preceding token plus the start state (id V).
  // Successors of one context have distinct pronunciations, so context plus
  // acoustics determine the token.
  std::vector<std::vector<int>> successors(V + 1);
  std::vector<int> prons(n_pron);
  std::iota(prons.begin(), prons.end(), 0);
  for (int ctx = 0; ctx <= V; ++ctx) {
    std::shuffle(prons.begin(), prons.end(), rng);
    for (int k = 0; k < spec.branching; ++k) {
      const int p = prons[k];
      const int n_variants = (V - p + n_pron - 1) / n_pron;
      std::uniform_int_distribution<int> pick(0, n_variants - 1);
      successors[ctx].push_back(p + n_pron * pick(rng));
    }
  }

  std::uniform_int_distribution<int> length(spec.min_tokens, spec.max_tokens);
  std::uniform_int_distribution<int> frames(spec.min_frames_per_token, spec.max_frames_per_token);
  std::uniform_int_distribution<int> any_token(0, V - 1);
  std::uniform_int_distribution<int> any_successor(0, spec.branching - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  data.utterances.reserve(n_utterances);
  for (int n = 0; n < n_utterances; ++n) {
    Utterance utt;
    std::ostringstream id;
    id << "utt" << std::setw(6) << std::setfill('0') << n;
    utt.id = id.str();
    const int U = length(rng);
    int prev = V;
    std::vector<int> durations;
    for (int u = 0; u < U; ++u) {
      const int token = coin(rng) < spec.context_noise ? any_token(rng)
                                                        : successors[prev][any_successor(rng)];
      utt.y.push_back(token);
      durations.push_back(frames(rng));
      prev = token;
    }
    const int T = std::accumulate(durations.begin(), durations.end(), 0);
    utt.x.frames.resize(T, d);
    int t = 0;
    for (int u = 0; u < U; ++u) {
      const int v = utt.y[u];
      Eigen::VectorXd base = pron_proto[v % n_pron];
      const auto &tone = data.lexicon.entries()[v].tone;
      if (tone) base += tone_proto[*tone - 1];
      for (int k = 0; k < durations[u]; ++k, ++t) {
        Eigen::VectorXd frame = base;
        if (k == 0) frame += spec.onset_strength * onset_marker;
        for (int i = 0; i < d; ++i) frame(i) += spec.noise_std * normal(rng);
        utt.x.frames.row(t) = frame.transpose();
      }
    }
    data.utterances.push_back(std::move(utt));
  }
  return data;
}

void SplitTrainValidation(const std::vector<Utterance> &all, int valid_count,
                          std::uint64_t seed, std::vector<Utterance> *train,
                          std::vector<Utterance> *valid) {
  if (valid_count < 0 || valid_count > static_cast<int>(all.size())) {
    throw Error(ErrorKind::kInvalidSpec, "validation size outside [0, n]");
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  train->clear();
  valid->clear();
  for (std::size_t i = 0; i < order.size(); ++i) {
    (static_cast<int>(i) < valid_count ? valid : train)->push_back(all[order[i]]);
  }
}

// ---------------------------------------------------------------------------
// On-disk formats

namespace {
constexpr char kMatMagic[8] = {'P', 'E', 'T', 'M', 'A', 'T', '0', '1'};
constexpr std::uint32_t kFloat64 = 1;
}  // namespace

void WriteFrameMatrix(const std::string &path, const Eigen::MatrixXd &m) {
  static_assert(std::endian::native == std::endian::little);
  std::string out(kMatMagic, sizeof(kMatMagic));
  const std::uint64_t rows = m.rows(), cols = m.cols();
  out.append(reinterpret_cast<const char *>(&kFloat64), sizeof(kFloat64));
  out.append(reinterpret_cast<const char *>(&rows), sizeof(rows));
  out.append(reinterpret_cast<const char *>(&cols), sizeof(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.append(reinterpret_cast<const char *>(&v), sizeof(v));
    }
  }
  WriteFile(path, out);
}

Eigen::MatrixXd ReadFrameMatrix(const std::string &path) {
  const std::string bytes = ReadFile(path);
  constexpr std::size_t kHeader = 8 + 4 + 8 + 8;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMatMagic, 8) != 0) {
    throw Error(ErrorKind::kParse, "'" + path + "' is not a frame matrix");
  }
  std::uint32_t dtype;
  std::uint64_t rows, cols;
  std::memcpy(&dtype, bytes.data() + 8, 4);
  std::memcpy(&rows, bytes.data() + 12, 8);
  std::memcpy(&cols, bytes.data() + 20, 8);
  if (dtype != kFloat64) throw Error(ErrorKind::kParse, "'" + path + "': unsupported dtype");
  if (bytes.size() != kHeader + rows * cols * sizeof(double)) {
    throw Error(ErrorKind::kParse, "'" + path + "': size does not match shape");
  }
  Eigen::MatrixXd m(rows, cols);
  const char *p = bytes.data() + kHeader;
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c, p += sizeof(double)) {
      std::memcpy(&m(r, c), p, sizeof(double));
    }
  }
  return m;
}

std::string TokensToText(const TokenSequence &y, const std::vector<std::string> &vocab) {
  std::string out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.at(y[i]);
  }
  return out;
}

void WriteManifest(const std::string &manifest_path, const std::string &frame_dir,
                   const std::vector<Utterance> &utterances,
                   const std::vector<std::string> &vocab) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(manifest_path).parent_path();
  fs::create_directories(base / frame_dir);
  std::string manifest;
  for (const auto &utt : utterances) {
    const std::string rel = (fs::path(frame_dir) / (utt.id + ".bin")).generic_string();
    WriteFrameMatrix((base / rel).string(), utt.x.frames);
    manifest += utt.id + "\t" + rel + "\t" + TokensToText(utt.y, vocab) + "\n";
  }
  WriteFile(manifest_path, manifest);
}

std::vector<Utterance> ReadManifest(const std::string &manifest_path,
                                    const std::vector<std::string> &vocab) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(manifest_path).parent_path();
  std::unordered_map<std::string, int> ids;
  for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], static_cast<int>(i));
  std::vector<Utterance> out;
  std::size_t line_no = 0;
  const std::string text = ReadFile(manifest_path);
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = Split(line, '\t');
    if (fields.size() != 3) {
      throw Error(ErrorKind::kParse, manifest_path + ":" + std::to_string(line_no) +
                                         ": expected 3 tab-separated fields");
    }
    Utterance utt;
    utt.id = std::string(fields[0]);
    utt.x.frames = ReadFrameMatrix((base / std::string(fields[1])).string());
    for (const auto &tok : SplitWhitespace(fields[2])) {
      auto it = ids.find(tok);
      if (it == ids.end()) throw Error(ErrorKind::kUnknownToken, "'" + tok + "' in " + manifest_path);
      utt.y.push_back(it->second);
    }
    out.push_back(std::move(utt));
  }
  return out;
}

void WriteVocab(const std::string &path, const std::vector<std::string> &vocab) {
  std::string out;
  for (const auto &t : vocab) out += t + "\n";
  WriteFile(path, out);
}

std::vector<std::string> ReadVocab(const std::string &path) {
  std::vector<std::string> vocab;
  const std::string text = ReadFile(path);
  for (std::string_view line : SplitLines(text)) {
    if (!Trim(line).empty()) vocab.emplace_back(Trim(line));
  }
  return vocab;
}

}  // namespace pet
