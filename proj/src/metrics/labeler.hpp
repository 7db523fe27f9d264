#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace eie {

// Presence flags over the 14 observations, in the order of observations14().
using ObservationLabels = std::array<bool, 14>;

// Rule-based observation labeler: phrase tables per observation, a window
// negation detector (negator within `window` tokens before the phrase) and
// uncertainty markers. Negative, uncertain and unmentioned all collapse to
// negative.
struct LabelerRules {
  int version = 1;
  int window = 3;
  std::vector<std::string> negators;
  std::vector<std::string> uncertainty;                    // may be multi-word
  std::vector<std::vector<std::string>> phrases;           // per observation

  static const LabelerRules& builtin();
  static LabelerRules load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

ObservationLabels label_extract(const std::string& text, const LabelerRules& rules);

// Micro-averaged accuracy over the 5 most common observations, pooled over
// (example, observation) pairs.
double acc5(const std::vector<ObservationLabels>& hyp, const std::vector<ObservationLabels>& ref);

// Example-based accuracy over all 14 observations: per-example fraction
// correct, averaged over examples.
double acc14(const std::vector<ObservationLabels>& hyp, const std::vector<ObservationLabels>& ref);

}  // namespace eie
