#include "pet/lexicon.h"

#include <functional>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pet/error.h"
#include "test_support.h"

namespace pet {
namespace {

const ConsonantInventory kPinyin = {"b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j",
                                    "q", "x", "zh", "ch", "sh", "r", "z", "c", "s", "y", "w"};

ErrorKind KindOf(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "no pet::Error thrown";
  return ErrorKind::kIo;
}

TEST(LexiconTest, ParsesTonalLine) {
  Lexicon lex = LoadLexicon("他\tta\t1\n", kPinyin);
  ASSERT_EQ(lex.size(), 1u);
  EXPECT_EQ(lex.entries()[0], (LexiconEntry{"他", "ta", 1}));
  EXPECT_TRUE(lex.tonal());
}

TEST(LexiconTest, FieldsAreTrimmedAndCommentsSkipped) {
  Lexicon lex = LoadLexicon("# header\n\n他 \t ta \t 1\r\n", kPinyin);
  ASSERT_EQ(lex.size(), 1u);
  EXPECT_EQ(lex.entries()[0], (LexiconEntry{"他", "ta", 1}));
}

TEST(LexiconTest, NonTonalLexicon) {
  Lexicon lex = LoadLexicon("a\tta\nb\tta\t\n", kPinyin);
  EXPECT_FALSE(lex.tonal());
  EXPECT_FALSE(lex.entries()[1].tone.has_value());
}

TEST(LexiconTest, FourLineToyHasThreePronunciations) {
  Lexicon lex = LoadLexicon("他\tta\n她\tta\n妈\tma\n安\tan\n", kPinyin);
  EXPECT_EQ(ComputeHomophoneHistogram(lex).DistinctPronunciations(), 3u);
}

TEST(LexiconTest, Errors) {
  EXPECT_EQ(KindOf([] { LoadLexicon("他\tta\t1\n他\tta\t1\n", kPinyin); }),
            ErrorKind::kDuplicateToken);
  EXPECT_EQ(KindOf([] { LoadLexicon("他\tta1\n", kPinyin); }),
            ErrorKind::kMalformedPronunciation);
  EXPECT_EQ(KindOf([] { LoadLexicon("他\tTa\n", kPinyin); }),
            ErrorKind::kMalformedPronunciation);
  EXPECT_EQ(KindOf([] { LoadLexicon("他\t\n", kPinyin); }), ErrorKind::kMalformedPronunciation);
  EXPECT_EQ(KindOf([] { LoadLexicon("他\tta\t1\n妈\tma\n", kPinyin); }),
            ErrorKind::kMissingTone);
  EXPECT_EQ(KindOf([] { LoadLexicon("他\tta\t9\n", kPinyin); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { LoadLexicon("他\n", kPinyin); }), ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { LoadLexicon("他\tta\t1\tx\n", kPinyin); }), ErrorKind::kParse);
}

TEST(LexiconTest, SerializeRoundTrip) {
  Lexicon lex = test::ToyLexicon();
  Lexicon again = LoadLexicon(lex.Serialize(), lex.consonant_inventory());
  EXPECT_EQ(again.entries(), lex.entries());
  EXPECT_EQ(again.Serialize(), lex.Serialize());
}

TEST(LexiconTest, InventoryFile) {
  ConsonantInventory inv = ReadConsonantInventory(test::DataPath("pinyin_initials.txt"));
  EXPECT_EQ(inv, kPinyin);
}

TEST(FeatureExtractionTest, LongestMatchOnset) {
  Lexicon lex = LoadLexicon("张\tzhang\t1\n", {"z", "zh"});
  TokenFeatures f = ExtractFeatures(lex, "张");
  EXPECT_EQ(f.c, "zh");
  EXPECT_EQ(f.v, "ang");
  EXPECT_EQ(f.p, "zhang");
  EXPECT_EQ(f.w, "张");
  EXPECT_EQ(f.t, 1);
}

TEST(FeatureExtractionTest, TableExample) {
  Lexicon lex = LoadLexicon("他\tta\t1\n", kPinyin);
  EXPECT_EQ(ExtractFeatures(lex, "他"), (TokenFeatures{"他", "ta", 1, "t", "a"}));
}

TEST(FeatureExtractionTest, VowelInitialHasEmptyOnset) {
  EXPECT_EQ(SplitPronunciation("an", kPinyin), std::make_pair(std::string(), std::string("an")));
  EXPECT_EQ(SplitPronunciation("er", kPinyin), std::make_pair(std::string(), std::string("er")));
}

TEST(FeatureExtractionTest, OnsetNeverConsumesWholeSyllable) {
  // A syllabic "m" stays whole; "ng" falls back to the shorter onset "n".
  EXPECT_EQ(SplitPronunciation("m", {"m"}), std::make_pair(std::string(), std::string("m")));
  EXPECT_EQ(SplitPronunciation("ng", {"n", "ng"}),
            std::make_pair(std::string("n"), std::string("g")));
}

TEST(FeatureExtractionTest, UnknownToken) {
  Lexicon lex = LoadLexicon("他\tta\t1\n", kPinyin);
  EXPECT_EQ(KindOf([&] { ExtractFeatures(lex, "她"); }), ErrorKind::kUnknownToken);
}

TEST(FeatureExtractionTest, SplitConcatenatesToPronunciation) {
  Lexicon lex = test::ToyLexicon();
  for (const auto &e : lex.entries()) {
    TokenFeatures f = ExtractFeatures(lex, e.token);
    EXPECT_EQ(f.c + f.v, f.p);
    EXPECT_FALSE(f.v.empty());
  }
}

TEST(HomophoneHistogramTest, HandExamples) {
  Lexicon two = LoadLexicon("他\tta\n她\tta\n妈\tma\n", kPinyin);
  EXPECT_EQ(ComputeHomophoneHistogram(two).buckets, (std::map<std::size_t, std::size_t>{{1, 1}, {2, 1}}));

  Lexicon unique = LoadLexicon("a\tba\nb\tma\nc\tda\nd\tla\n", kPinyin);
  EXPECT_EQ(ComputeHomophoneHistogram(unique).buckets, (std::map<std::size_t, std::size_t>{{1, 4}}));

  Lexicon six = LoadLexicon("a\tta\nb\tta\nc\tta\nd\tta\ne\tta\nf\tta\n", kPinyin);
  EXPECT_EQ(ComputeHomophoneHistogram(six).buckets, (std::map<std::size_t, std::size_t>{{6, 1}}));
}

TEST(HomophoneHistogramTest, EmptyLexicon) {
  EXPECT_EQ(KindOf([] { ComputeHomophoneHistogram(Lexicon()); }), ErrorKind::kEmptyLexicon);
}

// Counted by hand from data/toy_lexicon.tsv: shi x5; yi, ta, ma x3; li, zhang x2;
// zhong, ren, da, an, chang, er x1.
TEST(HomophoneHistogramTest, ToyLexicon) {
  Lexicon lex = test::ToyLexicon();
  HomophoneHistogram h = ComputeHomophoneHistogram(lex);
  EXPECT_EQ(h.buckets, (std::map<std::size_t, std::size_t>{{1, 6}, {2, 2}, {3, 3}, {5, 1}}));
  EXPECT_EQ(h.ToText(), "1\t6\n2\t2\n3\t3\n5\t1\n");
  EXPECT_EQ(h.TotalEntries(), 24u);
  EXPECT_EQ(h.DistinctPronunciations(), 12u);
}

// With tones: shi4 x3, shi2 x2, ta1 x3, li3 x2, zhang1 x2, twelve singletons.
TEST(HomophoneHistogramTest, ToyLexiconToneSensitive) {
  HomophoneHistogram h = ComputeHomophoneHistogram(test::ToyLexicon(), true);
  EXPECT_EQ(h.buckets, (std::map<std::size_t, std::size_t>{{1, 12}, {2, 3}, {3, 2}}));
}

TEST(HomophoneHistogramTest, MassConservationOnRandomLexicons) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> syllables = {"ba", "ma", "ta", "zhang", "shi", "an", "li", "er"};
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> size(1, 60), pick(0, syllables.size() - 1), tone(1, 4);
    const bool tonal = trial % 2 == 0;
    std::vector<LexiconEntry> entries;
    const int n = size(rng);
    std::set<std::string> prons, pron_tones;
    for (int i = 0; i < n; ++i) {
      LexiconEntry e{"t" + std::to_string(i), syllables[pick(rng)], std::nullopt};
      if (tonal) e.tone = tone(rng);
      prons.insert(e.pron);
      pron_tones.insert(e.pron + std::to_string(e.tone.value_or(0)));
      entries.push_back(e);
    }
    Lexicon lex(entries, kPinyin);
    for (bool sensitive : {false, true}) {
      HomophoneHistogram h = ComputeHomophoneHistogram(lex, sensitive);
      EXPECT_EQ(h.TotalEntries(), static_cast<std::size_t>(n));
      EXPECT_EQ(h.DistinctPronunciations(), sensitive ? pron_tones.size() : prons.size());
    }
  }
}

}  // namespace
}  // namespace pet
