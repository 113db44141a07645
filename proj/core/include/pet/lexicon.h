// pet/lexicon.h
//
// Pronunciation dictionary ingestion and the per-token feature decomposition
// used by the embedding tables: word identity (W), romanized pronunciation (P),
// tone (T), leading consonant(s) (C) and the remainder (V).

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pet {

struct LexiconEntry {
  std::string token;
  std::string pron;
  std::optional<int> tone;

  bool operator==(const LexiconEntry &) const = default;
};

struct LexiconOptions {
  // Letters a pronunciation may be spelled with.
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  // Inclusive tone range; Mandarin uses 1-4 plus 5 (or 0) for the neutral tone.
  int min_tone = 0;
  int max_tone = 5;
};

// Ordered list of onset consonants, e.g. the pinyin initials. Multi-letter
// consonants ("zh", "ch", "sh") must be listed explicitly.
using ConsonantInventory = std::vector<std::string>;

ConsonantInventory ParseConsonantInventory(std::string_view source,
                                           const LexiconOptions &options = {});
ConsonantInventory ReadConsonantInventory(const std::string &path,
                                          const LexiconOptions &options = {});

class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::vector<LexiconEntry> entries, ConsonantInventory inventory,
          const LexiconOptions &options = {});

  const std::vector<LexiconEntry> &entries() const { return entries_; }
  const ConsonantInventory &consonant_inventory() const { return inventory_; }
  bool tonal() const { return tonal_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // nullptr when the token has no entry.
  const LexiconEntry *Find(std::string_view token) const;

  // Serializes in the lexicon file format; Parse(Serialize()) is the identity.
  std::string Serialize() const;

 private:
  std::vector<LexiconEntry> entries_;
  ConsonantInventory inventory_;
  std::unordered_map<std::string, std::size_t> index_;
  bool tonal_ = false;
};

// Parses lexicon file content: one `token<TAB>pron[<TAB>tone]` entry per
// line, `#` comment lines. Throws DuplicateToken, MalformedPronunciation,
// MissingTone or ParseError.
Lexicon LoadLexicon(std::string_view source, ConsonantInventory inventory,
                    const LexiconOptions &options = {});
Lexicon LoadLexiconFile(const std::string &path, ConsonantInventory inventory,
                        const LexiconOptions &options = {});

struct TokenFeatures {
  std::string w;
  std::string p;
  std::optional<int> t;
  std::string c;
  std::string v;

  bool operator==(const TokenFeatures &) const = default;
};

// Splits a pronunciation into its onset consonant and remainder. The onset is
// the longest inventory entry that is a prefix of `pron` and leaves a
// non-empty remainder; it is empty when no such entry exists.
std::pair<std::string, std::string> SplitPronunciation(
    std::string_view pron, const ConsonantInventory &inventory);

// Throws UnknownToken when `token` has no entry.
TokenFeatures ExtractFeatures(const Lexicon &lex, std::string_view token);

struct HomophoneHistogram {
  // x (characters sharing one pronunciation) -> y (pronunciations shared by
  // exactly x characters).
  std::map<std::size_t, std::size_t> buckets;

  std::size_t TotalEntries() const;
  std::size_t DistinctPronunciations() const;
  // Two-column "x<TAB>y" text, one bucket per line.
  std::string ToText() const;

  bool operator==(const HomophoneHistogram &) const = default;
};

// Groups entries by pronunciation string, or by (pronunciation, tone) when
// `tone_sensitive` is set. Throws EmptyLexicon on an empty lexicon.
HomophoneHistogram ComputeHomophoneHistogram(const Lexicon &lex,
                                             bool tone_sensitive = false);

}  // namespace pet
