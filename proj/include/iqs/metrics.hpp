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

// The three explanation-quality terms and their weighted composite:
//
//   IQS = a1 * mean_c J(Feat_c,H, Feat_c,m)          (plausibility)
//       + a2 * 1 / (ln(N_chunk - beta) + 1)          (simplicity)
//       + a3 * 1 / (L(y_H, y_M) + 1)                 (reproducibility)
//
// with a1 + a2 + a3 = 1. ScoreMethod() runs the per-sample, per-annotator
// aggregation over a whole evaluation set for one method.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "iqs/error.hpp"
#include "iqs/feature_extraction.hpp"
#include "iqs/types.hpp"

namespace iqs {

struct TermTriple {
  double plausibility = 0.0;
  double simplicity = 0.0;
  double reproducibility = 0.0;

  bool operator==(const TermTriple&) const = default;
};

inline constexpr double kProbabilityClamp = 1e-12;

// |a ∩ b| / |a ∪ b|, and 1 when both are empty.
inline double Jaccard(const IndexSet& a, const IndexSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Checks an annotation against the method's sets: removals must be
// highlighted under that class, additions must not be, class ids must be
// known and indices in range (when token_count is given).
inline void CheckAnnotationAgainst(const SignedFeatureSets& method_sets,
                                   const AnnotationRecord& ann,
                                   std::optional<std::size_t> token_count = {}) {
  const std::string who = "annotation (" + ann.sample_id + ", " + ann.method_id +
                          ", " + ann.annotator_id + ")";
  auto check_class = [&](const ClassId& cls, const char* field) {
    if (!method_sets.by_class.contains(cls))
      throw Error(ErrorKind::kConsistency,
                  who + " names unknown class '" + cls + "' in " + field, field);
  };
  auto check_range = [&](TokenIndex i, const char* field) {
    if (token_count && i >= *token_count)
      throw Error(ErrorKind::kConsistency,
                  who + " has out-of-range token index " + std::to_string(i) +
                      " in " + field,
                  field);
  };
  for (const auto& [cls, idx] : ann.removals) {
    check_class(cls, "removals");
    const IndexSet& highlighted = method_sets.at(cls);
    for (auto i : idx) {
      check_range(i, "removals");
      if (!highlighted.contains(i))
        throw Error(ErrorKind::kConsistency,
                    who + " removes token " + std::to_string(i) +
                        " which the method did not highlight as '" + cls + "'",
                    "removals");
    }
  }
  for (const auto& [cls, idx] : ann.additions) {
    check_class(cls, "additions");
    const IndexSet& highlighted = method_sets.at(cls);
    for (auto i : idx) {
      check_range(i, "additions");
      if (highlighted.contains(i))
        throw Error(ErrorKind::kConsistency,
                    who + " adds token " + std::to_string(i) +
                        " which the method already highlighted as '" + cls + "'",
                    "additions");
    }
  }
}

// Feat_c,H = (Feat_c,m \ removals_c) ∪ additions_c for every class c.
inline SignedFeatureSets DeriveHumanSets(const SignedFeatureSets& method_sets,
                                         const AnnotationRecord& ann) {
  CheckAnnotationAgainst(method_sets, ann);
  SignedFeatureSets human;
  for (const auto& [cls, highlighted] : method_sets.by_class) {
    IndexSet kept = highlighted;
    if (auto it = ann.removals.find(cls); it != ann.removals.end()) {
      for (auto i : it->second) kept.erase(i);
    }
    human.by_class[cls] = std::move(kept);
  }
  for (const auto& [cls, idx] : ann.additions) {
    for (auto i : idx) {
      for (const auto& [other, s] : human.by_class) {
        if (other != cls && s.contains(i))
          throw Error(ErrorKind::kAnnotationConflict,
                      "annotation (" + ann.sample_id + ", " + ann.method_id + ", " +
                          ann.annotator_id + ") adds token " + std::to_string(i) +
                          " to '" + cls + "' while it stays in '" + other + "'",
                      "additions");
      }
    }
    human.by_class[cls].insert(idx.begin(), idx.end());
  }
  return human;
}

inline double Plausibility(const SignedFeatureSets& human_sets,
                           const SignedFeatureSets& method_sets,
                           std::span<const ClassId> classes) {
  if (classes.empty())
    throw Error(ErrorKind::kConfig, "plausibility needs at least one class",
                "class_sign_map");
  double sum = 0.0;
  for (const auto& cls : classes)
    sum += Jaccard(human_sets.at(cls), method_sets.at(cls));
  return sum / static_cast<double>(classes.size());
}

// 1 for n <= beta + 1, else 1 / (ln(n - beta) + 1).
inline double Simplicity(ChunkCount count, const SimplicityConfig& cfg) {
  const double n = static_cast<double>(count.n);
  if (n <= cfg.beta + 1.0) return 1.0;
  return 1.0 / (std::log(n - cfg.beta) + 1.0);
}

inline double MeanAbsoluteError(std::span<const double> human,
                                std::span<const double> model) {
  if (human.empty() || human.size() != model.size())
    throw Error(ErrorKind::kUsage, "loss needs equal, nonempty output lists");
  double sum = 0.0;
  for (std::size_t i = 0; i < human.size(); ++i) sum += std::abs(human[i] - model[i]);
  return sum / static_cast<double>(human.size());
}

// Mean binary cross-entropy of hard labels against probabilities clamped to
// [1e-12, 1 - 1e-12].
inline double BinaryLogLoss(std::span<const int> labels,
                            std::span<const double> probabilities) {
  if (labels.empty() || labels.size() != probabilities.size())
    throw Error(ErrorKind::kUsage, "loss needs equal, nonempty output lists");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p =
        std::clamp(probabilities[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(labels.size());
}

inline double PositiveProbability(double model_output, const TaskSpec& task) {
  if (task.output_transform == OutputTransform::kSigmoid)
    return 1.0 / (1.0 + std::exp(-model_output));
  return model_output;
}

// Regression answer as a number, clamped into score_range.
inline double HumanScore(const Label& answer, const TaskSpec& task,
                         std::vector<std::string>* warnings = nullptr) {
  const double* v = std::get_if<double>(&answer);
  if (v == nullptr)
    throw Error(ErrorKind::kData,
                "task '" + task.task_id + "' expects a numeric q1_answer",
                "q1_answer");
  const ScoreRange range = task.score_range.value_or(ScoreRange{});
  const double clamped = std::clamp(*v, range.lo, range.hi);
  if (clamped != *v && warnings != nullptr)
    warnings->push_back("q1_answer " + std::to_string(*v) +
                        " clamped into score_range");
  return clamped;
}

inline int HumanBinaryLabel(const Label& answer, const TaskSpec& task) {
  const std::string* name = std::get_if<std::string>(&answer);
  if (name == nullptr || !task.IsClass(*name))
    throw Error(ErrorKind::kData,
                "q1_answer is not one of the classes of task '" + task.task_id + "'",
                "q1_answer");
  return *name == task.positive_class() ? 1 : 0;
}

// L(y_H, y_M) with the task's loss: MAE on raw scores for regression, log
// loss of human hard labels against model probabilities for classification.
inline double Loss(std::span<const Label> human, std::span<const double> model,
                   const TaskSpec& task, std::vector<std::string>* warnings = nullptr) {
  if (human.empty() || human.size() != model.size())
    throw Error(ErrorKind::kUsage, "loss needs equal, nonempty output lists");
  if (task.loss == LossKind::kMeanAbsoluteError) {
    std::vector<double> h;
    h.reserve(human.size());
    for (const auto& a : human) h.push_back(HumanScore(a, task, warnings));
    return MeanAbsoluteError(h, model);
  }
  std::vector<int> y;
  std::vector<double> p;
  for (std::size_t i = 0; i < human.size(); ++i) {
    y.push_back(HumanBinaryLabel(human[i], task));
    p.push_back(PositiveProbability(model[i], task));
  }
  return BinaryLogLoss(y, p);
}

inline double Reproducibility(double loss) {
  if (!(loss >= 0.0) || !std::isfinite(loss))
    throw Error(ErrorKind::kUsage, "loss must be finite and >= 0");
  return 1.0 / (loss + 1.0);
}

inline double ComposeIqs(const TermTriple& terms, const IQSWeights& w) {
  w.Validate();
  return w.alpha1 * terms.plausibility + w.alpha2 * terms.simplicity +
         w.alpha3 * terms.reproducibility;
}

enum class AggregationOrder {
  // Plausibility: mean over samples of the mean over that sample's annotators.
  // Reproducibility: mean over annotators of 1/(L+1), L pooled over the
  // annotator's samples.
  kPerSampleThenAnnotator,
  // Every annotation record weighted equally; one loss over all records.
  kPooled,
};

struct ScoringOptions {
  AggregationOrder aggregation = AggregationOrder::kPerSampleThenAnnotator;
};

// Scores one method over an evaluation set. `explanations` must all share a
// method_id and cover every sample exactly once; annotations for other
// methods are ignored.
inline MethodScorecard ScoreMethod(const TaskSpec& task,
                                   std::span<const Sample> samples,
                                   std::span<const AttributionExplanation> explanations,
                                   std::span<const AnnotationRecord> annotations,
                                   const ExtractionPolicy& policy,
                                   const SimplicityConfig& cfg, const IQSWeights& w,
                                   const ScoringOptions& options = {},
                                   std::vector<std::string>* warnings = nullptr) {
  task.Validate();
  policy.Validate();
  cfg.Validate();
  w.Validate();
  if (explanations.empty())
    throw Error(ErrorKind::kUsage, "no explanations to score");
  const std::string method_id = explanations.front().method_id;

  std::map<std::string, const Sample*> by_id;
  for (const auto& s : samples) {
    if (!by_id.emplace(s.sample_id, &s).second)
      throw Error(ErrorKind::kUsage, "duplicate sample '" + s.sample_id + "'");
  }
  std::map<std::string, const AttributionExplanation*> expl_by_sample;
  for (const auto& e : explanations) {
    if (e.method_id != method_id)
      throw Error(ErrorKind::kUsage, "explanations mix methods '" + method_id +
                                         "' and '" + e.method_id + "'");
    if (!by_id.contains(e.sample_id))
      throw Error(ErrorKind::kReferential,
                  "explanation references unknown sample '" + e.sample_id + "'",
                  "sample_id");
    if (!expl_by_sample.emplace(e.sample_id, &e).second)
      throw Error(ErrorKind::kUsage, "two explanations of '" + method_id +
                                         "' for sample '" + e.sample_id + "'");
  }
  // sample_id -> annotator_id -> record
  std::map<std::string, std::map<std::string, const AnnotationRecord*>> anns;
  for (const auto& a : annotations) {
    if (a.method_id != method_id) continue;
    if (!by_id.contains(a.sample_id))
      throw Error(ErrorKind::kReferential,
                  "annotation references unknown sample '" + a.sample_id + "'",
                  "sample_id");
    if (!anns[a.sample_id].emplace(a.annotator_id, &a).second)
      throw Error(ErrorKind::kUsage, "duplicate annotation (" + a.sample_id + ", " +
                                         method_id + ", " + a.annotator_id + ")");
  }

  std::string missing_expl, uncovered;
  for (const auto& [id, s] : by_id) {
    if (!expl_by_sample.contains(id)) missing_expl += (missing_expl.empty() ? "" : ", ") + id;
    if (!anns.contains(id)) uncovered += (uncovered.empty() ? "" : ", ") + id;
  }
  if (!missing_expl.empty())
    throw Error(ErrorKind::kUsage,
                "method '" + method_id + "' lacks explanations for: " + missing_expl);
  if (!uncovered.empty())
    throw Error(ErrorKind::kIncompleteCoverage,
                "method '" + method_id + "' has no annotations for: " + uncovered);

  const std::vector<ClassId> classes = task.feature_classes();
  // annotator_id -> (y_H, y_M) in sample order
  std::map<std::string, std::pair<std::vector<Label>, std::vector<double>>> per_annotator;
  std::vector<Label> all_human;
  std::vector<double> all_model;

  double plaus_sum = 0.0;
  double simp_sum = 0.0;
  double pooled_plaus_sum = 0.0;
  std::size_t n_records = 0;

  for (const auto& [id, sample] : by_id) {
    const AttributionExplanation& expl = *expl_by_sample.at(id);
    const SignedFeatureSets method_sets = ExtractFeatureSets(expl, *sample, task, policy);
    simp_sum += Simplicity(CountChunks(method_sets), cfg);

    double sample_plaus = 0.0;
    const auto& sample_anns = anns.at(id);
    for (const auto& [annotator, rec] : sample_anns) {
      CheckAnnotationAgainst(method_sets, *rec, sample->token_count());
      const double p = Plausibility(DeriveHumanSets(method_sets, *rec), method_sets, classes);
      sample_plaus += p;
      pooled_plaus_sum += p;
      ++n_records;
      auto& [yh, ym] = per_annotator[annotator];
      yh.push_back(rec->q1_answer);
      ym.push_back(expl.model_output);
      all_human.push_back(rec->q1_answer);
      all_model.push_back(expl.model_output);
    }
    plaus_sum += sample_plaus / static_cast<double>(sample_anns.size());
  }

  const double n_samples = static_cast<double>(by_id.size());
  TermTriple terms;
  terms.simplicity = simp_sum / n_samples;
  if (options.aggregation == AggregationOrder::kPooled) {
    terms.plausibility = pooled_plaus_sum / static_cast<double>(n_records);
    terms.reproducibility = Reproducibility(Loss(all_human, all_model, task, warnings));
  } else {
    terms.plausibility = plaus_sum / n_samples;
    double repro_sum = 0.0;
    for (const auto& [annotator, outputs] : per_annotator)
      repro_sum += Reproducibility(Loss(outputs.first, outputs.second, task, warnings));
    terms.reproducibility = repro_sum / static_cast<double>(per_annotator.size());
  }

  MethodScorecard card;
  card.method_id = method_id;
  card.task_id = task.task_id;
  card.plausibility = terms.plausibility;
  card.simplicity = terms.simplicity;
  card.reproducibility = terms.reproducibility;
  card.iqs = ComposeIqs(terms, w);
  card.weights = w;
  card.n_samples = by_id.size();
  card.n_annotators = per_annotator.size();
  return card;
}

inline TermTriple TermsOf(const MethodScorecard& card) {
  return {card.plausibility, card.simplicity, card.reproducibility};
}

}  // namespace iqs
