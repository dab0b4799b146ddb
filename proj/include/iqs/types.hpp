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

// Shared domain types for explanation-quality scoring. Everything here is a
// plain value type; construction-time checks live in the Validate() members
// and in the ingestion layer.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "iqs/error.hpp"

namespace iqs {

// Index into the flattened token sequence of a sample (all segments
// concatenated in order).
using TokenIndex = std::size_t;
using IndexSet = std::set<TokenIndex>;
using ClassId = std::string;

// Either a class name (classification) or a score (regression).
using Label = std::variant<std::string, double>;

struct Sample {
  std::string sample_id;
  std::string task_id;
  std::vector<std::vector<std::string>> segments;
  std::optional<Label> gold_label;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& seg : segments) n += seg.size();
    return n;
  }

  std::vector<std::string> flat_tokens() const {
    std::vector<std::string> out;
    out.reserve(token_count());
    for (const auto& seg : segments) out.insert(out.end(), seg.begin(), seg.end());
    return out;
  }

  // Offset of the first token of each segment in the flat sequence.
  std::vector<std::size_t> segment_offsets() const {
    std::vector<std::size_t> out;
    std::size_t at = 0;
    for (const auto& seg : segments) {
      out.push_back(at);
      at += seg.size();
    }
    return out;
  }

  void Validate() const {
    if (sample_id.empty())
      throw Error(ErrorKind::kStructural, "sample_id is empty", "sample_id");
    if (segments.empty())
      throw Error(ErrorKind::kStructural,
                  "sample '" + sample_id + "' has no segments", "segments");
    for (const auto& seg : segments) {
      if (seg.empty())
        throw Error(ErrorKind::kStructural,
                    "sample '" + sample_id + "' has an empty segment",
                    "segments");
      for (const auto& tok : seg) {
        if (tok.empty())
          throw Error(ErrorKind::kStructural,
                      "sample '" + sample_id + "' has an empty token",
                      "segments");
      }
    }
  }

  bool operator==(const Sample&) const = default;
};

// FNV-1a over the token stream, with unit/record separators between tokens
// and segments so that re-segmentation changes the checksum.
inline std::string TokensChecksum(const Sample& sample) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& seg : sample.segments) {
    for (const auto& tok : seg) {
      for (unsigned char c : tok) mix(c);
      mix(0x1f);
    }
    mix(0x1e);
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "fnv1a64:";
  for (int shift = 60; shift >= 0; shift -= 4) out += kHex[(h >> shift) & 0xf];
  return out;
}

struct AttributionExplanation {
  std::string sample_id;
  std::string method_id;
  std::string tokens_checksum;
  std::vector<double> attributions;
  // Pre-threshold model output (y_M).
  double model_output = 0.0;
  std::optional<std::string> model_label;

  bool operator==(const AttributionExplanation&) const = default;
};

enum class TaskKind { kBinaryClassification, kRegression };
enum class LossKind { kLogLoss, kMeanAbsoluteError };
enum class AttributionSign { kPositive, kNegative };
// How a classification model_output becomes a positive-class probability.
enum class OutputTransform { kIdentity, kSigmoid };

struct ScoreRange {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const ScoreRange&) const = default;
};

struct TaskSpec {
  std::string task_id;
  TaskKind kind = TaskKind::kBinaryClassification;
  // Ordered class names; classes[1] is predicted when model_output >= threshold.
  std::vector<std::string> classes;
  LossKind loss = LossKind::kLogLoss;
  double threshold = 0.5;
  std::optional<ScoreRange> score_range;
  // Feature classes C and the attribution sign each one collects. For
  // regression these are pseudo-classes such as pos_contrib / neg_contrib.
  std::map<ClassId, AttributionSign> class_sign_map;
  OutputTransform output_transform = OutputTransform::kIdentity;

  // C, in ascending class-id order.
  std::vector<ClassId> feature_classes() const {
    std::vector<ClassId> out;
    for (const auto& [cls, sign] : class_sign_map) out.push_back(cls);
    return out;
  }

  ClassId ClassForSign(AttributionSign sign) const {
    for (const auto& [cls, s] : class_sign_map) {
      if (s == sign) return cls;
    }
    throw Error(ErrorKind::kConfig,
                "task '" + task_id + "' has no class mapped to " +
                    (sign == AttributionSign::kPositive ? "positive" : "negative") +
                    " attribution",
                "class_sign_map");
  }

  const std::string& positive_class() const { return classes.at(1); }

  // Thresholded label of a raw model output (classification only).
  const std::string& ThresholdLabel(double output) const {
    return output >= threshold ? classes.at(1) : classes.at(0);
  }

  bool IsClass(const std::string& name) const {
    for (const auto& c : classes) {
      if (c == name) return true;
    }
    return false;
  }

  void Validate() const {
    auto fail = [this](const std::string& what, const char* field) {
      throw Error(ErrorKind::kConfig, "task '" + task_id + "': " + what, field);
    };
    if (task_id.empty()) fail("task_id is empty", "task_id");
    if (!std::isfinite(threshold)) fail("threshold is not finite", "threshold");
    if (class_sign_map.size() != 2)
      fail("class_sign_map must name exactly two classes", "class_sign_map");
    bool has_pos = false, has_neg = false;
    for (const auto& [cls, sign] : class_sign_map) {
      if (cls.empty()) fail("class_sign_map has an empty class id", "class_sign_map");
      (sign == AttributionSign::kPositive ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
      fail("class_sign_map must map one class to each attribution sign",
           "class_sign_map");

    if (kind == TaskKind::kBinaryClassification) {
      if (loss != LossKind::kLogLoss)
        fail("binary_classification requires log_loss", "loss");
      if (classes.size() != 2 || classes[0] == classes[1] || classes[0].empty() ||
          classes[1].empty())
        fail("binary_classification needs two distinct class names", "classes");
      for (const auto& c : classes) {
        if (!class_sign_map.contains(c))
          fail("class '" + c + "' missing from class_sign_map", "class_sign_map");
      }
      if (output_transform == OutputTransform::kIdentity &&
          (threshold < 0.0 || threshold > 1.0))
        fail("threshold must lie in [0,1] for probability outputs", "threshold");
    } else {
      if (loss != LossKind::kMeanAbsoluteError)
        fail("regression requires mean_absolute_error", "loss");
      if (!classes.empty()) fail("regression tasks take no classes", "classes");
      if (!score_range) fail("regression requires score_range", "score_range");
      if (!(score_range->lo < score_range->hi))
        fail("score_range needs lo < hi", "score_range");
      if (threshold < score_range->lo || threshold > score_range->hi)
        fail("threshold outside score_range", "threshold");
    }
  }

  bool operator==(const TaskSpec&) const = default;
};

// Per-class sets of token indices. Sets are kept pairwise disjoint by every
// operation that builds one.
struct SignedFeatureSets {
  std::map<ClassId, IndexSet> by_class;

  const IndexSet& at(const ClassId& cls) const {
    static const IndexSet kEmpty;
    auto it = by_class.find(cls);
    return it == by_class.end() ? kEmpty : it->second;
  }

  bool IsDisjoint() const {
    IndexSet seen;
    for (const auto& [cls, s] : by_class) {
      for (auto i : s) {
        if (!seen.insert(i).second) return false;
      }
    }
    return true;
  }

  // Class holding `index`, if any.
  std::optional<ClassId> ClassOf(TokenIndex index) const {
    for (const auto& [cls, s] : by_class) {
      if (s.contains(index)) return cls;
    }
    return std::nullopt;
  }

  bool operator==(const SignedFeatureSets&) const = default;
};

struct ChunkCount {
  std::size_t n = 0;
  bool operator==(const ChunkCount&) const = default;
};

// One annotator's answers for one (sample, method) pair.
struct AnnotationRecord {
  std::string sample_id;
  std::string method_id;
  std::string annotator_id;
  Label q1_answer;
  std::map<ClassId, IndexSet> removals;
  std::map<ClassId, IndexSet> additions;
  std::optional<double> duration_secs;

  bool operator==(const AnnotationRecord&) const = default;
};

inline constexpr double kWeightSumTolerance = 1e-9;

struct IQSWeights {
  double alpha1 = 1.0 / 3.0;
  double alpha2 = 1.0 / 3.0;
  double alpha3 = 1.0 / 3.0;

  static IQSWeights Equal() { return {}; }

  static IQSWeights Checked(double a1, double a2, double a3) {
    IQSWeights w{a1, a2, a3};
    w.Validate();
    return w;
  }

  void Validate() const {
    for (double a : {alpha1, alpha2, alpha3}) {
      if (!(a >= 0.0 && a <= 1.0))
        throw Error(ErrorKind::kConfig, "weight outside [0,1]", "weights");
    }
    if (std::abs(alpha1 + alpha2 + alpha3 - 1.0) > kWeightSumTolerance)
      throw Error(ErrorKind::kConfig, "weights must sum to 1", "weights");
  }

  bool operator==(const IQSWeights&) const = default;
};

struct SimplicityConfig {
  double beta = 9.0;

  void Validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw Error(ErrorKind::kConfig, "beta must be a finite value >= 0", "beta");
  }

  bool operator==(const SimplicityConfig&) const = default;
};

struct MethodScorecard {
  std::string method_id;
  std::string task_id;
  // Unscaled term values.
  double plausibility = 0.0;
  double simplicity = 0.0;
  double reproducibility = 0.0;
  double iqs = 0.0;
  IQSWeights weights;
  std::size_t n_samples = 0;
  std::size_t n_annotators = 0;

  bool operator==(const MethodScorecard&) const = default;
};

}  // namespace iqs
