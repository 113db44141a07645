#include "pet/synthetic.h"

#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "pet/error.h"
#include "pet/text_utils.h"
#include "test_support.h"

namespace pet {
namespace {

namespace fs = std::filesystem;

fs::path ScratchDir(const std::string &name) {
  fs::path dir = fs::temp_directory_path() / ("pet_synthetic_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(SyntheticTest, RoundRobinHomophones) {
  SyntheticTaskSpec spec;  // V=60, 20 pronunciations
  std::vector<std::string> vocab;
  Lexicon lex = SyntheticLexicon(spec, &vocab);
  EXPECT_EQ(vocab.size(), 60u);
  EXPECT_EQ(ComputeHomophoneHistogram(lex).buckets,
            (std::map<std::size_t, std::size_t>{{3, 20}}));
  EXPECT_FALSE(lex.tonal());
  for (int v = 0; v < 60; ++v) {
    EXPECT_EQ(lex.entries()[v].pron, lex.entries()[v % 20].pron);
  }
}

TEST(SyntheticTest, TonalLexicon) {
  SyntheticTaskSpec spec;
  spec.tone_count = 4;
  Lexicon lex = SyntheticLexicon(spec, nullptr);
  EXPECT_TRUE(lex.tonal());
  std::set<int> tones;
  for (const auto &e : lex.entries()) tones.insert(*e.tone);
  EXPECT_EQ(tones, (std::set<int>{1, 2, 3, 4}));
  // Tones split some but not all homophone groups.
  const auto plain = ComputeHomophoneHistogram(lex, false);
  const auto toned = ComputeHomophoneHistogram(lex, true);
  EXPECT_GT(toned.DistinctPronunciations(), plain.DistinctPronunciations());
  EXPECT_LT(toned.DistinctPronunciations(), 60u);
}

TEST(SyntheticTest, LexiconFileRoundTrip) {
  Lexicon lex = SyntheticLexicon(SyntheticTaskSpec{}, nullptr);
  Lexicon again = LoadLexicon(lex.Serialize(), lex.consonant_inventory());
  EXPECT_EQ(again.entries(), lex.entries());
}

TEST(SyntheticTest, Deterministic) {
  SyntheticTaskSpec spec;
  SyntheticDataset a = GenerateDataset(spec, 20), b = GenerateDataset(spec, 20);
  spec.seed = 2;
  SyntheticDataset c = GenerateDataset(spec, 20);
  bool any_difference = false;
  for (int n = 0; n < 20; ++n) {
    EXPECT_EQ(a.utterances[n].y, b.utterances[n].y);
    EXPECT_EQ(a.utterances[n].x.frames, b.utterances[n].x.frames);
    EXPECT_EQ(a.utterances[n].id, b.utterances[n].id);
    any_difference |= a.utterances[n].y != c.utterances[n].y;
  }
  EXPECT_TRUE(any_difference);
}

TEST(SyntheticTest, ShapesWithinSpec) {
  SyntheticTaskSpec spec;
  SyntheticDataset data = GenerateDataset(spec, 200);
  ASSERT_EQ(data.utterances.size(), 200u);
  for (const auto &u : data.utterances) {
    const int U = static_cast<int>(u.y.size());
    EXPECT_GE(U, spec.min_tokens);
    EXPECT_LE(U, spec.max_tokens);
    EXPECT_GE(u.x.num_frames(), U * spec.min_frames_per_token);
    EXPECT_LE(u.x.num_frames(), U * spec.max_frames_per_token);
    EXPECT_EQ(u.x.frames.cols(), spec.feature_dim);
    for (int v : u.y) {
      EXPECT_GE(v, 0);
      EXPECT_LT(v, spec.vocab_size);
    }
  }
}

TEST(SyntheticTest, NoiselessHomophonesAreAcousticallyIdentical) {
  SyntheticTaskSpec spec;
  spec.noise_std = 0.0;
  spec.min_frames_per_token = spec.max_frames_per_token = 2;
  SyntheticDataset data = GenerateDataset(spec, 50);
  std::map<int, Eigen::MatrixXd> by_pron;
  std::set<int> tokens_seen;
  for (const auto &u : data.utterances) {
    for (std::size_t i = 0; i < u.y.size(); ++i) {
      const Eigen::MatrixXd frames = u.x.frames.middleRows(2 * i, 2);
      auto [it, inserted] = by_pron.emplace(u.y[i] % spec.n_pronunciations, frames);
      if (!inserted) EXPECT_EQ(it->second, frames);
      tokens_seen.insert(u.y[i]);
    }
  }
  // The check covered homophones, not just repeats of one token.
  EXPECT_GT(tokens_seen.size(), by_pron.size());
}

TEST(SyntheticTest, ContextFollowsBigramWithoutNoise) {
  SyntheticTaskSpec spec;
  spec.context_noise = 0.0;
  SyntheticDataset data = GenerateDataset(spec, 300);
  std::map<int, std::set<int>> successors;
  for (const auto &u : data.utterances) {
    for (std::size_t i = 1; i < u.y.size(); ++i) successors[u.y[i - 1]].insert(u.y[i]);
  }
  for (const auto &[prev, next] : successors) {
    EXPECT_LE(next.size(), static_cast<std::size_t>(spec.branching));
    std::set<int> prons;
    for (int v : next) prons.insert(v % spec.n_pronunciations);
    EXPECT_EQ(prons.size(), next.size()) << "successors of " << prev << " share a pronunciation";
  }
}

TEST(SyntheticTest, InvalidSpecs) {
  auto rejects = [](auto mutate) {
    SyntheticTaskSpec spec;
    mutate(spec);
    try {
      ValidateSpec(spec);
      return false;
    } catch (const Error &e) {
      return e.kind() == ErrorKind::kInvalidSpec;
    }
  };
  EXPECT_TRUE(rejects([](auto &s) { s.n_pronunciations = 60; }));
  EXPECT_TRUE(rejects([](auto &s) { s.n_pronunciations = 0; }));
  EXPECT_TRUE(rejects([](auto &s) { s.min_frames_per_token = 0; }));
  EXPECT_TRUE(rejects([](auto &s) { s.max_frames_per_token = 1; }));
  EXPECT_TRUE(rejects([](auto &s) { s.feature_dim = 0; }));
  EXPECT_TRUE(rejects([](auto &s) { s.noise_std = -1.0; }));
  EXPECT_TRUE(rejects([](auto &s) { s.tone_count = 6; }));
  EXPECT_TRUE(rejects([](auto &s) { s.branching = 21; }));
  EXPECT_TRUE(rejects([](auto &s) { s.context_noise = 1.5; }));
  EXPECT_TRUE(rejects([](auto &s) { s.min_tokens = 0; }));
  EXPECT_FALSE(rejects([](auto &) {}));
  EXPECT_THROW(GenerateDataset(SyntheticTaskSpec{}, -1), Error);
}

TEST(SyntheticTest, TrainValidationSplit) {
  SyntheticDataset data = GenerateDataset(SyntheticTaskSpec{}, 50);
  std::vector<Utterance> train, valid, train2, valid2;
  SplitTrainValidation(data.utterances, 10, 3, &train, &valid);
  SplitTrainValidation(data.utterances, 10, 3, &train2, &valid2);
  EXPECT_EQ(train.size(), 40u);
  EXPECT_EQ(valid.size(), 10u);
  std::set<std::string> ids;
  for (const auto &u : train) ids.insert(u.id);
  for (const auto &u : valid) ids.insert(u.id);
  EXPECT_EQ(ids.size(), 50u);
  for (std::size_t i = 0; i < valid.size(); ++i) EXPECT_EQ(valid[i].id, valid2[i].id);
  EXPECT_THROW(SplitTrainValidation(data.utterances, 51, 3, &train, &valid), Error);
}

TEST(SyntheticTest, DiskRoundTrip) {
  const fs::path dir = ScratchDir("disk");
  SyntheticDataset data = GenerateDataset(SyntheticTaskSpec{}, 5);
  const std::string manifest = (dir / "train.tsv").string();
  WriteManifest(manifest, "frames", data.utterances, data.vocab);
  WriteVocab((dir / "vocab.txt").string(), data.vocab);
  std::vector<std::string> vocab = ReadVocab((dir / "vocab.txt").string());
  EXPECT_EQ(vocab, data.vocab);
  std::vector<Utterance> loaded = ReadManifest(manifest, vocab);
  ASSERT_EQ(loaded.size(), 5u);
  for (int n = 0; n < 5; ++n) {
    EXPECT_EQ(loaded[n].id, data.utterances[n].id);
    EXPECT_EQ(loaded[n].y, data.utterances[n].y);
    EXPECT_EQ(loaded[n].x.frames, data.utterances[n].x.frames);
  }
  vocab[data.utterances[0].y[0]] = "not-a-token";
  try {
    ReadManifest(manifest, vocab);
    ADD_FAILURE() << "accepted";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownToken);
  }
  fs::remove_all(dir);
}

TEST(SyntheticTest, FrameMatrixFormat) {
  const fs::path dir = ScratchDir("matrix");
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const std::string path = (dir / "m.bin").string();
  WriteFrameMatrix(path, m);
  const std::string bytes = ReadFile(path);
  EXPECT_EQ(bytes.size(), 28u + 6 * 8);
  EXPECT_EQ(bytes.substr(0, 8), "PETMAT01");
  EXPECT_EQ(ReadFrameMatrix(path), m);
  WriteFile(path, bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(ReadFrameMatrix(path), Error);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace pet
