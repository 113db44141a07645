// pet/feature_config.h
//
// Feature sets for the decoder and joiner embeddings and the short-hand
// string grammar used on the command line: "<decoder>[-<joiner>]", e.g. "V",
// "PW", "CV-CVTW". The joiner part defaults to "W".

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace pet {

// Canonical order used for display and for summation: P, C, V, T, W.
enum class Feature : std::uint8_t { kP = 0, kC, kV, kT, kW };

inline constexpr std::array<Feature, 5> kAllFeatures = {
    Feature::kP, Feature::kC, Feature::kV, Feature::kT, Feature::kW};

char FeatureLetter(Feature f);
std::optional<Feature> FeatureFromLetter(char letter);

class FeatureSet {
 public:
  constexpr FeatureSet() = default;
  FeatureSet(std::initializer_list<Feature> features) {
    for (Feature f : features) Insert(f);
  }

  bool Has(Feature f) const { return (bits_ >> static_cast<int>(f)) & 1u; }
  void Insert(Feature f) { bits_ |= static_cast<std::uint8_t>(1u << static_cast<int>(f)); }
  bool empty() const { return bits_ == 0; }
  int size() const { return __builtin_popcount(bits_); }
  std::string ToString() const;

  bool operator==(const FeatureSet &) const = default;

 private:
  std::uint8_t bits_ = 0;
};

struct FeatureConfig {
  FeatureSet decoder{Feature::kW};
  FeatureSet joiner{Feature::kW};

  // "V-VW" style; the joiner part is always written out.
  std::string ToString() const;
  bool operator==(const FeatureConfig &) const = default;
};

// Order-insensitive within each side. Throws UnknownFeatureLetter,
// JoinerMissingW, ToneOnNonTonal (when `tonal` is known and false) or
// InvalidConfig (empty side, repeated letter, stray separator).
FeatureConfig ParseFeatureString(std::string_view text,
                                 std::optional<bool> tonal = std::nullopt);

// Throws InvalidConfig if the config cannot be instantiated for a lexicon
// with the given tonality.
void ValidateFeatureConfig(const FeatureConfig &config, bool tonal);

}  // namespace pet
