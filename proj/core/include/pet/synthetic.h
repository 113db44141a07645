// pet/synthetic.h
//
// Homophone-rich synthetic speech task. Tokens are assigned round-robin to a
// smaller set of pronunciations; every frame of a token is drawn from that
// pronunciation's prototype plus Gaussian noise, so homophones are
// acoustically identical and only the token-level context (a sparse bigram
// generator) tells them apart.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pet/lexicon.h"
#include "pet/transducer.h"

namespace pet {

struct SyntheticTaskSpec {
  int vocab_size = 60;
  int n_pronunciations = 20;
  int tone_count = 0;  // 0 for a non-tonal language
  int min_frames_per_token = 2;
  int max_frames_per_token = 4;
  int feature_dim = 16;
  double noise_std = 0.5;
  // Scale of the onset-consonant part of each pronunciation prototype
  // relative to the remainder; small values make same-rhyme syllables
  // confusable.
  double consonant_weight = 1.0;
  // Added to the first frame of every token.
  double onset_strength = 1.0;
  int min_tokens = 4;
  int max_tokens = 10;
  // Successors per preceding token in the bigram generator.
  int branching = 3;
  // Probability that the next token ignores the bigram and is uniform.
  double context_noise = 0.1;
  std::uint64_t seed = 1;
};

// Throws InvalidSpec.
void ValidateSpec(const SyntheticTaskSpec &spec);

struct Utterance {
  std::string id;
  AcousticSequence x;
  TokenSequence y;
};

struct SyntheticDataset {
  Lexicon lexicon;
  std::vector<std::string> vocab;  // id -> token text
  std::vector<Utterance> utterances;
};

// The lexicon of the task alone (deterministic, independent of the seed).
Lexicon SyntheticLexicon(const SyntheticTaskSpec &spec, std::vector<std::string> *vocab);

SyntheticDataset GenerateDataset(const SyntheticTaskSpec &spec, int n_utterances);

// Deterministic shuffle by `seed`, then the first `valid_count` utterances
// become the validation set.
void SplitTrainValidation(const std::vector<Utterance> &all, int valid_count,
                          std::uint64_t seed, std::vector<Utterance> *train,
                          std::vector<Utterance> *valid);

// Frame matrices on disk: magic "PETMAT01", uint32 dtype code (1 = float64),
// uint64 rows, uint64 cols, then row-major little-endian values.
void WriteFrameMatrix(const std::string &path, const Eigen::MatrixXd &m);
Eigen::MatrixXd ReadFrameMatrix(const std::string &path);

// Manifest: one `utt_id<TAB>frame_path<TAB>transcript` line per utterance;
// the transcript is whitespace-separated token text and frame paths are
// relative to the manifest's directory. Frame files land in `frame_dir`
// (relative to the manifest directory).
void WriteManifest(const std::string &manifest_path, const std::string &frame_dir,
                   const std::vector<Utterance> &utterances,
                   const std::vector<std::string> &vocab);
// Throws UnknownToken for transcript tokens outside `vocab`.
std::vector<Utterance> ReadManifest(const std::string &manifest_path,
                                    const std::vector<std::string> &vocab);

// One token per line; the line number is the id.
void WriteVocab(const std::string &path, const std::vector<std::string> &vocab);
std::vector<std::string> ReadVocab(const std::string &path);

std::string TokensToText(const TokenSequence &y, const std::vector<std::string> &vocab);

}  // namespace pet
