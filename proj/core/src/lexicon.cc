// pet/lexicon.cc

#include "pet/lexicon.h"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>
#include <utility>

#include "pet/error.h"
#include "pet/text_utils.h"

namespace pet {

namespace {

void CheckSpelling(std::string_view pron, const LexiconOptions &options,
                   std::string_view what) {
  if (pron.empty()) {
    throw Error(ErrorKind::kMalformedPronunciation,
                std::string("empty ") + std::string(what));
  }
  for (char ch : pron) {
    if (options.alphabet.find(ch) == std::string::npos) {
      throw Error(ErrorKind::kMalformedPronunciation,
                  std::string(what) + " '" + std::string(pron) +
                      "' has a letter outside the alphabet");
    }
  }
}

int ParseTone(std::string_view field, const LexiconOptions &options,
              std::size_t line_no) {
  int tone = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), tone);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                       ": tone '" + std::string(field) +
                                       "' is not an integer");
  }
  if (tone < options.min_tone || tone > options.max_tone) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                       ": tone " + std::to_string(tone) +
                                       " outside the declared tone set");
  }
  return tone;
}

}  // namespace

ConsonantInventory ParseConsonantInventory(std::string_view source,
                                           const LexiconOptions &options) {
  ConsonantInventory inventory;
  std::set<std::string> seen;
  for (std::string_view line : SplitLines(source)) {
    line = Trim(line);
    if (line.empty() || line.front() == '#') continue;
    CheckSpelling(line, options, "consonant");
    if (seen.insert(std::string(line)).second) inventory.emplace_back(line);
  }
  return inventory;
}

ConsonantInventory ReadConsonantInventory(const std::string &path,
                                          const LexiconOptions &options) {
  return ParseConsonantInventory(ReadFile(path), options);
}

Lexicon::Lexicon(std::vector<LexiconEntry> entries, ConsonantInventory inventory,
                 const LexiconOptions &options)
    : entries_(std::move(entries)), inventory_(std::move(inventory)) {
  for (const auto &c : inventory_) CheckSpelling(c, options, "consonant");
  tonal_ = std::any_of(entries_.begin(), entries_.end(),
                       [](const LexiconEntry &e) { return e.tone.has_value(); });
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto &e = entries_[i];
    if (e.token.empty()) throw Error(ErrorKind::kParse, "empty token");
    CheckSpelling(e.pron, options, "pronunciation");
    if (tonal_ && !e.tone) {
      throw Error(ErrorKind::kMissingTone,
                  "token '" + e.token + "' has no tone in a tonal lexicon");
    }
    if (e.tone && (*e.tone < options.min_tone || *e.tone > options.max_tone)) {
      throw Error(ErrorKind::kParse, "token '" + e.token +
                                         "' has a tone outside the tone set");
    }
    if (!index_.emplace(e.token, i).second) {
      throw Error(ErrorKind::kDuplicateToken, "token '" + e.token + "'");
    }
  }
}

const LexiconEntry *Lexicon::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::string Lexicon::Serialize() const {
  std::string out;
  for (const auto &e : entries_) {
    out += e.token;
    out += '\t';
    out += e.pron;
    if (e.tone) {
      out += '\t';
      out += std::to_string(*e.tone);
    }
    out += '\n';
  }
  return out;
}

Lexicon LoadLexicon(std::string_view source, ConsonantInventory inventory,
                    const LexiconOptions &options) {
  std::vector<LexiconEntry> entries;
  std::size_t line_no = 0;
  for (std::string_view line : SplitLines(source)) {
    ++line_no;
    if (Trim(line).empty() || Trim(line).front() == '#') continue;
    std::vector<std::string_view> fields = Split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                         ": expected 2 or 3 tab-separated fields");
    }
    LexiconEntry entry;
    entry.token = std::string(Trim(fields[0]));
    entry.pron = std::string(Trim(fields[1]));
    if (entry.token.empty()) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line_no) + ": empty token");
    }
    CheckSpelling(entry.pron, options, "pronunciation");
    if (fields.size() == 3 && !Trim(fields[2]).empty()) {
      entry.tone = ParseTone(Trim(fields[2]), options, line_no);
    }
    entries.push_back(std::move(entry));
  }
  return Lexicon(std::move(entries), std::move(inventory), options);
}

Lexicon LoadLexiconFile(const std::string &path, ConsonantInventory inventory,
                        const LexiconOptions &options) {
  return LoadLexicon(ReadFile(path), std::move(inventory), options);
}

std::pair<std::string, std::string> SplitPronunciation(
    std::string_view pron, const ConsonantInventory &inventory) {
  std::size_t best = 0;
  for (const auto &c : inventory) {
    if (c.size() > best && c.size() < pron.size() && pron.starts_with(c)) {
      best = c.size();
    }
  }
  return {std::string(pron.substr(0, best)), std::string(pron.substr(best))};
}

TokenFeatures ExtractFeatures(const Lexicon &lex, std::string_view token) {
  const LexiconEntry *entry = lex.Find(token);
  if (entry == nullptr) {
    throw Error(ErrorKind::kUnknownToken, "'" + std::string(token) + "'");
  }
  auto [c, v] = SplitPronunciation(entry->pron, lex.consonant_inventory());
  return TokenFeatures{entry->token, entry->pron, entry->tone, std::move(c),
                       std::move(v)};
}

std::size_t HomophoneHistogram::TotalEntries() const {
  std::size_t n = 0;
  for (auto [x, y] : buckets) n += x * y;
  return n;
}

std::size_t HomophoneHistogram::DistinctPronunciations() const {
  std::size_t n = 0;
  for (auto [x, y] : buckets) n += y;
  return n;
}

std::string HomophoneHistogram::ToText() const {
  std::ostringstream out;
  for (auto [x, y] : buckets) out << x << '\t' << y << '\n';
  return out.str();
}

HomophoneHistogram ComputeHomophoneHistogram(const Lexicon &lex,
                                             bool tone_sensitive) {
  if (lex.empty()) throw Error(ErrorKind::kEmptyLexicon, "no entries");
  std::map<std::pair<std::string, int>, std::size_t> groups;
  for (const auto &e : lex.entries()) {
    int tone = tone_sensitive ? e.tone.value_or(-1) : -1;
    ++groups[{e.pron, tone}];
  }
  HomophoneHistogram hist;
  for (const auto &[key, size] : groups) ++hist.buckets[size];
  return hist;
}

}  // namespace pet
