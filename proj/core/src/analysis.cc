// pet/analysis.cc

#include "pet/analysis.h"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"
#include "pet/embedding.h"
#include "pet/error.h"
#include "pet/text_utils.h"

namespace pet {

char EditKindLetter(EditKind kind) {
  switch (kind) {
    case EditKind::kMatch: return 'M';
    case EditKind::kSub: return 'S';
    case EditKind::kIns: return 'I';
    case EditKind::kDel: return 'D';
  }
  return '?';
}

double Alignment::cer() const {
  if (ref_length() == 0) return errors() == 0 ? 0.0 : 1.0;
  return static_cast<double>(errors()) / ref_length();
}

Alignment Align(std::span<const int> ref, std::span<const int> hyp) {
  const int n = static_cast<int>(ref.size()), m = static_cast<int>(hyp.size());
  std::vector<int> cost(static_cast<std::size_t>(n + 1) * (m + 1));
  auto at = [&](int i, int j) -> int & { return cost[static_cast<std::size_t>(i) * (m + 1) + j]; };
  for (int i = 0; i <= n; ++i) at(i, 0) = i;
  for (int j = 0; j <= m; ++j) at(0, j) = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1] ? 1 : 0),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }

  Alignment a;
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1] ? 1 : 0)) {
      const bool same = ref[i - 1] == hyp[j - 1];
      a.ops.push_back({same ? EditKind::kMatch : EditKind::kSub, i - 1, j - 1});
      ++(same ? a.matches : a.substitutions);
      --i;
      --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      a.ops.push_back({EditKind::kIns, -1, j - 1});
      ++a.insertions;
      --j;
    } else {
      a.ops.push_back({EditKind::kDel, i - 1, -1});
      ++a.deletions;
      --i;
    }
  }
  std::reverse(a.ops.begin(), a.ops.end());

  a.correct.assign(n, false);
  bool pending_insertion = false;
  for (const EditOp &op : a.ops) {
    if (op.kind == EditKind::kIns) {
      pending_insertion = true;
      continue;
    }
    a.correct[op.ref_pos] = op.kind == EditKind::kMatch && !pending_insertion;
    pending_insertion = false;
  }
  if (pending_insertion && n > 0) a.correct[n - 1] = false;
  return a;
}

std::vector<bool> ErrorFlags(const Alignment &alignment) {
  std::vector<bool> errors(alignment.correct.size());
  for (std::size_t i = 0; i < errors.size(); ++i) errors[i] = !alignment.correct[i];
  return errors;
}

ChainStats ComputeChainStats(std::span<const Alignment> alignments) {
  if (alignments.empty()) throw Error(ErrorKind::kEmptyCorpus, "no alignments");
  ChainStats s;
  std::int64_t errors = 0;
  for (const Alignment &a : alignments) {
    bool prev_error = false;  // utterance start counts as a correct predecessor
    for (bool ok : a.correct) {
      const bool error = !ok;
      if (prev_error) {
        ++(error ? s.n_ee : s.n_ec);
      } else {
        ++(error ? s.n_ce : s.n_cc);
      }
      prev_error = error;
    }
    s.ref_tokens += a.ref_length();
    s.substitutions += a.substitutions;
    s.insertions += a.insertions;
    s.deletions += a.deletions;
    errors += a.errors();
  }
  s.p_e_given_e_defined = s.n_ee + s.n_ec > 0;
  s.p_e_given_c_defined = s.n_ce + s.n_cc > 0;
  if (s.p_e_given_e_defined) s.p_e_given_e = static_cast<double>(s.n_ee) / (s.n_ee + s.n_ec);
  if (s.p_e_given_c_defined) s.p_e_given_c = static_cast<double>(s.n_ce) / (s.n_ce + s.n_cc);
  if (s.ref_tokens > 0) {
    s.cer = static_cast<double>(errors) / s.ref_tokens;
  } else {
    s.cer = errors == 0 ? 0.0 : 1.0;
  }
  return s;
}

std::int64_t ClusterStats::error_positions() const {
  std::int64_t n = 0;
  for (int len : cluster_lengths) n += len;
  return n;
}

ClusterStats ComputeClusterStats(std::span<const Alignment> alignments) {
  if (alignments.empty()) throw Error(ErrorKind::kEmptyCorpus, "no alignments");
  ClusterStats s;
  for (const Alignment &a : alignments) {
    int run = 0;
    for (bool ok : a.correct) {
      if (!ok) {
        ++run;
      } else if (run > 0) {
        s.cluster_lengths.push_back(run);
        run = 0;
      }
    }
    if (run > 0) s.cluster_lengths.push_back(run);
  }
  s.empty = s.cluster_lengths.empty();
  if (!s.empty) {
    s.avg_length = static_cast<double>(s.error_positions()) / s.cluster_lengths.size();
  }
  return s;
}

SubstitutionProfile ProfileSubstitutions(std::span<const Alignment> alignments,
                                         std::span<const std::vector<int>> refs,
                                         std::span<const std::vector<int>> hyps,
                                         const std::vector<std::string> &vocab,
                                         const Lexicon &lex) {
  if (alignments.size() != refs.size() || refs.size() != hyps.size()) {
    throw Error(ErrorKind::kShapeMismatch, "alignments, refs and hyps differ in length");
  }
  std::vector<FeatureValues> values;
  values.reserve(vocab.size());
  for (const auto &tok : vocab) values.push_back(ResolveFeatureValues(lex, tok));
  SubstitutionProfile profile;
  for (std::size_t n = 0; n < alignments.size(); ++n) {
    for (const EditOp &op : alignments[n].ops) {
      if (op.kind != EditKind::kSub) continue;
      const auto &r = values.at(refs[n][op.ref_pos]);
      const auto &h = values.at(hyps[n][op.hyp_pos]);
      ++profile.substitutions;
      const auto kP = static_cast<int>(Feature::kP), kV = static_cast<int>(Feature::kV);
      if (r[kP] != std::string(kNoPron) && r[kP] == h[kP]) ++profile.same_pron;
      if (r[kV] != std::string(kNoPron) && r[kV] == h[kV]) ++profile.same_rhyme;
    }
  }
  return profile;
}

std::string CompareModels(std::span<const ModelReport> reports) {
  if (reports.size() < 2) {
    throw Error(ErrorKind::kInvalidConfig, "comparison needs at least two reports");
  }
  std::string out = "decoder-emb\tjoiner-emb\tP(E|E)\tP(E|C)\tCER\tavg-cluster\tlabel\n";
  for (const ModelReport &r : reports) {
    out += fmt::format("{}\t{}\t{:.2f}{}\t{:.2f}{}\t{:.2f}\t{:.3f}{}\t{}\n", r.decoder_emb,
                       r.joiner_emb, 100.0 * r.chain.p_e_given_e,
                       r.chain.p_e_given_e_defined ? "" : "*", 100.0 * r.chain.p_e_given_c,
                       r.chain.p_e_given_c_defined ? "" : "*", 100.0 * r.chain.cer,
                       r.clusters.avg_length, r.clusters.empty ? "*" : "", r.label);
  }
  return out;
}

std::string ReportsToJson(std::span<const ModelReport> reports) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const ModelReport &r : reports) {
    runs.push_back({{"label", r.label},
                    {"decoder_emb", r.decoder_emb},
                    {"joiner_emb", r.joiner_emb},
                    {"p_e_given_e", r.chain.p_e_given_e},
                    {"p_e_given_e_defined", r.chain.p_e_given_e_defined},
                    {"p_e_given_c", r.chain.p_e_given_c},
                    {"p_e_given_c_defined", r.chain.p_e_given_c_defined},
                    {"n_cc", r.chain.n_cc},
                    {"n_ce", r.chain.n_ce},
                    {"n_ec", r.chain.n_ec},
                    {"n_ee", r.chain.n_ee},
                    {"ref_tokens", r.chain.ref_tokens},
                    {"substitutions", r.chain.substitutions},
                    {"insertions", r.chain.insertions},
                    {"deletions", r.chain.deletions},
                    {"cer", r.chain.cer},
                    {"clusters", r.clusters.cluster_lengths.size()},
                    {"avg_cluster_length", r.clusters.avg_length},
                    {"clusters_empty", r.clusters.empty}});
  }
  nlohmann::ordered_json j;
  j["insertion_attribution"] = "following reference position (last position for trailing)";
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

TextCorpus TokenizeCorpus(const std::string &ref_text, const std::string &hyp_text,
                          bool per_char) {
  auto ref_lines = SplitLines(ref_text);
  auto hyp_lines = SplitLines(hyp_text);
  if (ref_lines.size() != hyp_lines.size()) {
    throw Error(ErrorKind::kParse, "reference has " + std::to_string(ref_lines.size()) +
                                       " lines, hypothesis " + std::to_string(hyp_lines.size()));
  }
  TextCorpus corpus;
  std::unordered_map<std::string, int> ids;
  auto intern = [&](std::string_view line) {
    std::vector<int> out;
    for (const auto &tok : per_char ? SplitUtf8Chars(line) : SplitWhitespace(line)) {
      auto [it, inserted] = ids.emplace(tok, static_cast<int>(corpus.symbols.size()));
      if (inserted) corpus.symbols.push_back(tok);
      out.push_back(it->second);
    }
    return out;
  };
  for (std::size_t i = 0; i < ref_lines.size(); ++i) {
    corpus.refs.push_back(intern(ref_lines[i]));
    corpus.hyps.push_back(intern(hyp_lines[i]));
  }
  return corpus;
}

std::string AlignmentReportTsv(std::span<const Alignment> alignments, const TextCorpus &corpus) {
  std::string out = "utt\tref\thyp\tops\tflags\n";
  auto join = [&](const std::vector<int> &ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i > 0) s += ' ';
      s += corpus.symbols[ids[i]];
    }
    return s;
  };
  for (std::size_t n = 0; n < alignments.size(); ++n) {
    std::string ops, flags;
    for (const EditOp &op : alignments[n].ops) ops += EditKindLetter(op.kind);
    for (bool ok : alignments[n].correct) flags += ok ? 'C' : 'E';
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", n, join(corpus.refs[n]), join(corpus.hyps[n]),
                       ops, flags);
  }
  return out;
}

}  // namespace pet
