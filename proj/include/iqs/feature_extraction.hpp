// Copyright 2026 The IQS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "iqs/error.hpp"
#include "iqs/types.hpp"

namespace iqs {

enum class ExtractionMode { kRelativeThreshold, kAbsoluteThreshold, kTopK };

// Decides which attributed tokens count as "identified" by a method.
//   relative_threshold: |a| >= value * max|a|   (value in [0,1])
//   absolute_threshold: |a| >= value            (value >= 0)
//   top_k:              the k largest |a|       (k >= 1, ties to lower index)
// Zero attributions are never selected.
struct ExtractionPolicy {
  ExtractionMode mode = ExtractionMode::kRelativeThreshold;
  double value = 0.05;

  void Validate() const {
    switch (mode) {
      case ExtractionMode::kRelativeThreshold:
        if (!(value >= 0.0 && value <= 1.0))
          throw Error(ErrorKind::kConfig,
                      "relative_threshold fraction must lie in [0,1]",
                      "extraction_policy");
        break;
      case ExtractionMode::kAbsoluteThreshold:
        if (!(value >= 0.0) || !std::isfinite(value))
          throw Error(ErrorKind::kConfig,
                      "absolute_threshold cutoff must be finite and >= 0",
                      "extraction_policy");
        break;
      case ExtractionMode::kTopK:
        if (!(value >= 1.0) || value != std::floor(value) || !std::isfinite(value))
          throw Error(ErrorKind::kConfig, "top_k needs an integer k >= 1",
                      "extraction_policy");
        break;
    }
  }

  bool operator==(const ExtractionPolicy&) const = default;
};

inline std::string ExtractionModeName(ExtractionMode mode) {
  switch (mode) {
    case ExtractionMode::kRelativeThreshold: return "relative_threshold";
    case ExtractionMode::kAbsoluteThreshold: return "absolute_threshold";
    case ExtractionMode::kTopK: return "top_k";
  }
  return "";
}

inline ExtractionMode ParseExtractionMode(const std::string& name) {
  if (name == "relative_threshold") return ExtractionMode::kRelativeThreshold;
  if (name == "absolute_threshold") return ExtractionMode::kAbsoluteThreshold;
  if (name == "top_k") return ExtractionMode::kTopK;
  throw Error(ErrorKind::kConfig, "unknown extraction mode '" + name + "'",
              "extraction_policy");
}

// Parses the "mode:value" form used on the command line.
inline ExtractionPolicy ParseExtractionPolicy(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorKind::kUsage, "policy must be mode:value, got '" + text + "'",
                "policy");
  ExtractionPolicy policy;
  policy.mode = ParseExtractionMode(text.substr(0, colon));
  const std::string number = text.substr(colon + 1);
  char* end = nullptr;
  policy.value = std::strtod(number.c_str(), &end);
  if (number.empty() || end != number.c_str() + number.size())
    throw Error(ErrorKind::kUsage, "bad policy value '" + number + "'", "policy");
  policy.Validate();
  return policy;
}

inline SignedFeatureSets ExtractFeatureSets(std::span<const double> attributions,
                                            const TaskSpec& task,
                                            const ExtractionPolicy& policy) {
  policy.Validate();
  const ClassId pos_class = task.ClassForSign(AttributionSign::kPositive);
  const ClassId neg_class = task.ClassForSign(AttributionSign::kNegative);

  SignedFeatureSets out;
  for (const auto& cls : task.feature_classes()) out.by_class[cls];

  double max_abs = 0.0;
  for (double a : attributions) {
    if (!std::isfinite(a))
      throw Error(ErrorKind::kStructural, "non-finite attribution", "attributions");
    max_abs = std::max(max_abs, std::abs(a));
  }
  if (max_abs == 0.0) return out;

  auto assign = [&](TokenIndex i) {
    out.by_class[attributions[i] > 0.0 ? pos_class : neg_class].insert(i);
  };

  if (policy.mode == ExtractionMode::kTopK) {
    std::vector<TokenIndex> order(attributions.size());
    std::iota(order.begin(), order.end(), TokenIndex{0});
    std::stable_sort(order.begin(), order.end(), [&](TokenIndex a, TokenIndex b) {
      return std::abs(attributions[a]) > std::abs(attributions[b]);
    });
    const auto k = static_cast<std::size_t>(policy.value);
    for (std::size_t r = 0; r < order.size() && r < k; ++r) {
      if (attributions[order[r]] == 0.0) break;
      assign(order[r]);
    }
    return out;
  }

  const double cut = policy.mode == ExtractionMode::kRelativeThreshold
                         ? policy.value * max_abs
                         : policy.value;
  for (TokenIndex i = 0; i < attributions.size(); ++i) {
    const double a = attributions[i];
    if (a != 0.0 && std::abs(a) >= cut) assign(i);
  }
  return out;
}

// Checks the attribution length against the sample before extracting.
inline SignedFeatureSets ExtractFeatureSets(const AttributionExplanation& expl,
                                            const Sample& sample,
                                            const TaskSpec& task,
                                            const ExtractionPolicy& policy) {
  if (expl.attributions.size() != sample.token_count())
    throw Error(ErrorKind::kStructural,
                "explanation (" + expl.sample_id + ", " + expl.method_id + ") has " +
                    std::to_string(expl.attributions.size()) +
                    " attributions but the sample has " +
                    std::to_string(sample.token_count()) + " tokens",
                "attributions");
  return ExtractFeatureSets(std::span<const double>(expl.attributions), task, policy);
}

inline ChunkCount CountChunks(const SignedFeatureSets& sets) {
  ChunkCount count;
  for (const auto& [cls, s] : sets.by_class) count.n += s.size();
  return count;
}

}  // namespace iqs
