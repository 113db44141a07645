// pet/feature_config.cc

#include "pet/feature_config.h"

#include "pet/error.h"

namespace pet {

char FeatureLetter(Feature f) {
  switch (f) {
    case Feature::kP: return 'P';
    case Feature::kC: return 'C';
    case Feature::kV: return 'V';
    case Feature::kT: return 'T';
    case Feature::kW: return 'W';
  }
  return '?';
}

std::optional<Feature> FeatureFromLetter(char letter) {
  for (Feature f : kAllFeatures) {
    if (FeatureLetter(f) == letter) return f;
  }
  return std::nullopt;
}

std::string FeatureSet::ToString() const {
  std::string out;
  for (Feature f : kAllFeatures) {
    if (Has(f)) out += FeatureLetter(f);
  }
  return out;
}

std::string FeatureConfig::ToString() const {
  return decoder.ToString() + "-" + joiner.ToString();
}

namespace {

FeatureSet ParseSide(std::string_view text, std::string_view whole) {
  if (text.empty()) {
    throw Error(ErrorKind::kInvalidConfig,
                "empty feature set in '" + std::string(whole) + "'");
  }
  FeatureSet set;
  for (char letter : text) {
    auto f = FeatureFromLetter(letter);
    if (!f) {
      throw Error(ErrorKind::kUnknownFeatureLetter,
                  std::string("'") + letter + "' in '" + std::string(whole) + "'");
    }
    if (set.Has(*f)) {
      throw Error(ErrorKind::kInvalidConfig,
                  std::string("repeated '") + letter + "' in '" +
                      std::string(whole) + "'");
    }
    set.Insert(*f);
  }
  return set;
}

}  // namespace

FeatureConfig ParseFeatureString(std::string_view text, std::optional<bool> tonal) {
  FeatureConfig config;
  auto dash = text.find('-');
  if (dash == std::string_view::npos) {
    config.decoder = ParseSide(text, text);
    config.joiner = FeatureSet{Feature::kW};
  } else {
    if (text.find('-', dash + 1) != std::string_view::npos) {
      throw Error(ErrorKind::kInvalidConfig,
                  "more than one '-' in '" + std::string(text) + "'");
    }
    config.decoder = ParseSide(text.substr(0, dash), text);
    config.joiner = ParseSide(text.substr(dash + 1), text);
  }
  if (!config.joiner.Has(Feature::kW)) {
    throw Error(ErrorKind::kJoinerMissingW, "'" + std::string(text) + "'");
  }
  if (tonal.has_value() && !*tonal &&
      (config.decoder.Has(Feature::kT) || config.joiner.Has(Feature::kT))) {
    throw Error(ErrorKind::kToneOnNonTonal, "'" + std::string(text) + "'");
  }
  return config;
}

void ValidateFeatureConfig(const FeatureConfig &config, bool tonal) {
  if (config.decoder.empty() || config.joiner.empty()) {
    throw Error(ErrorKind::kInvalidConfig, "empty feature set");
  }
  if (!config.joiner.Has(Feature::kW)) {
    throw Error(ErrorKind::kInvalidConfig, "joiner features must include W");
  }
  if (!tonal && (config.decoder.Has(Feature::kT) || config.joiner.Has(Feature::kT))) {
    throw Error(ErrorKind::kInvalidConfig, "tone feature on a non-tonal lexicon");
  }
}

}  // namespace pet
