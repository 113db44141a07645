// pet/analysis.h
//
// Error-chain analysis of recognition output. Each reference token is marked
// correct or erroneous from a minimal edit alignment, then:
//
//   * ChainStats counts transitions between consecutive reference positions
//     (the first position of an utterance is preceded by a virtual correct
//     token) and derives P(E|E) and P(E|C);
//   * ClusterStats measures maximal runs of consecutive erroneous positions.
//
// Insertion attribution: an insertion between reference positions i-1 and i
// marks position i as an error; insertions after the last reference token
// mark the last position.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pet/lexicon.h"

namespace pet {

enum class EditKind : std::uint8_t { kMatch, kSub, kIns, kDel };

char EditKindLetter(EditKind kind);

struct EditOp {
  EditKind kind;
  int ref_pos;  // -1 for insertions
  int hyp_pos;  // -1 for deletions

  bool operator==(const EditOp &) const = default;
};

struct Alignment {
  std::vector<EditOp> ops;
  std::vector<bool> correct;  // one flag per reference position
  int matches = 0, substitutions = 0, insertions = 0, deletions = 0;

  int ref_length() const { return static_cast<int>(correct.size()); }
  int errors() const { return substitutions + insertions + deletions; }
  // errors / reference length; 0 for an empty reference with no errors.
  double cer() const;
};

// Unit-cost Levenshtein alignment. On equal cost the backtrace prefers
// match/substitution, then insertion, then deletion.
Alignment Align(std::span<const int> ref, std::span<const int> hyp);

// Flags -> alignment-free view used by the statistics below.
std::vector<bool> ErrorFlags(const Alignment &alignment);

struct ChainStats {
  // Transitions previous -> current over reference positions.
  std::int64_t n_cc = 0, n_ce = 0, n_ec = 0, n_ee = 0;
  double p_e_given_e = 0.0;  // n_ee / (n_ee + n_ec)
  double p_e_given_c = 0.0;  // n_ce / (n_ce + n_cc)
  bool p_e_given_e_defined = false;  // false: no erroneous previous token
  bool p_e_given_c_defined = false;
  std::int64_t ref_tokens = 0;
  std::int64_t substitutions = 0, insertions = 0, deletions = 0;
  double cer = 0.0;  // (S + D + I) / N over the corpus

  std::int64_t transitions() const { return n_cc + n_ce + n_ec + n_ee; }
};

// Throws EmptyCorpus when `alignments` is empty.
ChainStats ComputeChainStats(std::span<const Alignment> alignments);

struct ClusterStats {
  std::vector<int> cluster_lengths;  // in corpus order
  double avg_length = 0.0;
  bool empty = true;  // no erroneous positions at all

  std::int64_t error_positions() const;
};

// Runs never span utterances. Throws EmptyCorpus.
ClusterStats ComputeClusterStats(std::span<const Alignment> alignments);

// Substitutions whose reference and hypothesis tokens share a pronunciation
// feature; requires token ids to index `vocab`.
struct SubstitutionProfile {
  std::int64_t substitutions = 0;
  std::int64_t same_pron = 0;   // identical P (homophones)
  std::int64_t same_rhyme = 0;  // identical V
};

SubstitutionProfile ProfileSubstitutions(std::span<const Alignment> alignments,
                                         std::span<const std::vector<int>> refs,
                                         std::span<const std::vector<int>> hyps,
                                         const std::vector<std::string> &vocab,
                                         const Lexicon &lex);

struct ModelReport {
  std::string label;        // free-form run label
  std::string decoder_emb;  // e.g. "V"
  std::string joiner_emb;   // e.g. "W"
  ChainStats chain;
  ClusterStats clusters;
};

// Tab-separated table with the columns decoder-emb, joiner-emb, P(E|E),
// P(E|C), CER (percentages), avg-cluster and a label column. Throws
// InvalidConfig for fewer than two reports.
std::string CompareModels(std::span<const ModelReport> reports);

// Structured summary of the same reports (JSON).
std::string ReportsToJson(std::span<const ModelReport> reports);

// Text corpora: token strings are interned into ids shared by ref and hyp.
struct TextCorpus {
  std::vector<std::vector<int>> refs, hyps;
  std::vector<std::string> symbols;  // id -> text
};

// One utterance per line; whitespace-separated tokens, or one token per
// UTF-8 character when `per_char` is set. Throws ParseError when the line
// counts differ.
TextCorpus TokenizeCorpus(const std::string &ref_text, const std::string &hyp_text,
                          bool per_char);

// One line per utterance: index, reference, hypothesis, op letters
// (M/S/I/D) and C/E flags, tab-separated.
std::string AlignmentReportTsv(std::span<const Alignment> alignments, const TextCorpus &corpus);

}  // namespace pet
