#include "pet/checkpoint.h"

#include <filesystem>

#include <gtest/gtest.h>

#include "pet/error.h"
#include "pet/training.h"
#include "test_support.h"

namespace pet {
namespace {

void ExpectSameTensors(const ModelParams &a, const ModelParams &b) {
  ASSERT_TRUE(a.SameStructure(b));
  auto sa = TensorSpans(const_cast<ModelParams &>(a));
  auto sb = TensorSpans(const_cast<ModelParams &>(b));
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t k = 0; k < sa.size(); ++k) {
    ASSERT_EQ(sa[k].size(), sb[k].size());
    for (std::size_t i = 0; i < sa[k].size(); ++i) ASSERT_EQ(sa[k][i], sb[k][i]);
  }
}

ErrorKind LoadError(std::string_view bytes) {
  try {
    DeserializeCheckpoint(bytes);
  } catch (const Error &e) {
    return e.kind();
  }
  return ErrorKind::kIo;
}

TEST(CheckpointTest, ByteExactRoundTrip) {
  for (const std::string features : {"W", "CV-PW", "PT-PTW"}) {
    const int tones = features.find('T') != std::string::npos ? 3 : 0;
    for (EncoderKind kind : {EncoderKind::kRecurrent, EncoderKind::kFeedForward}) {
      ModelParams m = test::TinyModel(features, 5, kind, tones);
      CheckpointMetadata meta{{"step", "120"}, {"note", "tab\tand\nnewline"}};
      const std::string bytes = SerializeCheckpoint(m, meta);
      CheckpointMetadata loaded_meta;
      ModelParams loaded = DeserializeCheckpoint(bytes, &loaded_meta);
      EXPECT_EQ(loaded_meta, meta);
      ExpectSameTensors(m, loaded);
      EXPECT_EQ(loaded.features, m.features);
      EXPECT_EQ(loaded.dims, m.dims);
      EXPECT_EQ(loaded.vocab, m.vocab);
      EXPECT_EQ(SerializeCheckpoint(loaded, loaded_meta), bytes);
    }
  }
}

TEST(CheckpointTest, FoldedRoundTrip) {
  ModelParams folded = FoldModel(test::TinyModel("CV-PW", 5));
  const std::string bytes = SerializeCheckpoint(folded);
  ModelParams loaded = DeserializeCheckpoint(bytes);
  EXPECT_TRUE(loaded.folded());
  ExpectSameTensors(folded, loaded);
  EXPECT_EQ(SerializeCheckpoint(loaded), bytes);
}

TEST(CheckpointTest, LoadedModelDecodesIdentically) {
  ModelParams m = test::TinyModel("V-CVW", 6);
  m.joiner.out_bias(m.blank(), 0) -= 1.0;
  ModelParams loaded = DeserializeCheckpoint(SerializeCheckpoint(m));
  std::mt19937_64 rng(4);
  for (int n = 0; n < 10; ++n) {
    AcousticSequence x = test::RandomFrames(rng, 5, 5);
    EXPECT_EQ(GreedyDecode(loaded, x), GreedyDecode(m, x));
  }
}

TEST(CheckpointTest, RejectsMalformedInput) {
  const std::string bytes = SerializeCheckpoint(test::TinyModel("W", 5));
  EXPECT_EQ(LoadError(""), ErrorKind::kParse);
  EXPECT_EQ(LoadError("PETCKPT\x02" + bytes.substr(8)), ErrorKind::kParse);
  EXPECT_EQ(LoadError(bytes.substr(0, bytes.size() - 8)), ErrorKind::kParse);
  EXPECT_EQ(LoadError(bytes + "x"), ErrorKind::kParse);
  std::string broken_header = bytes;
  broken_header[16] = '!';
  EXPECT_EQ(LoadError(broken_header), ErrorKind::kParse);
}

TEST(CheckpointTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "pet_checkpoint_test.ckpt";
  ModelParams m = test::TinyModel("P", 5);
  SaveCheckpoint(path.string(), m, {{"k", "v"}});
  CheckpointMetadata meta;
  ModelParams loaded = LoadCheckpoint(path.string(), &meta);
  ExpectSameTensors(m, loaded);
  EXPECT_EQ(meta.at("k"), "v");
  std::filesystem::remove(path);
  EXPECT_THROW(LoadCheckpoint(path.string()), Error);
}

}  // namespace
}  // namespace pet
