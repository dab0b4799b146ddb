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

// Seeded synthetic evaluation bundles for desk-scale testing.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <fmt/format.h>

#include "iqs/error.hpp"
#include "iqs/feature_extraction.hpp"
#include "iqs/ingestion.hpp"
#include "iqs/types.hpp"

namespace iqs {

struct SyntheticOptions {
  std::uint64_t seed = 42;
  int n_samples = 10;
  int n_methods = 2;
  int n_annotators = 3;
  // Probability that an annotator flips a highlight or perturbs q1.
  double noise = 0.2;
  TaskKind kind = TaskKind::kRegression;
};

namespace detail {

// mt19937_64 is fully specified by the standard; the std distributions are
// not, so values are mapped by hand to stay identical across toolchains.
class FixtureRng {
 public:
  explicit FixtureRng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [lo, hi].
  int Between(int lo, int hi) {
    return lo + static_cast<int>(Uniform() * static_cast<double>(hi - lo + 1));
  }

 private:
  std::mt19937_64 gen_;
};

inline constexpr std::array<const char*, 24> kFixtureWords = {
    "the",    "a",      "film",  "story",  "acting", "plot",  "woman", "child",
    "walks",  "along",  "river", "quiet",  "bright", "dull",  "warm",  "cold",
    "music",  "scene",  "slow",  "clever", "never",  "truly", "city",  "road"};

}  // namespace detail

inline TaskConfig SyntheticTaskConfig(TaskKind kind) {
  TaskConfig cfg;
  TaskSpec& t = cfg.task;
  t.kind = kind;
  if (kind == TaskKind::kRegression) {
    t.task_id = "synthetic_similarity";
    t.loss = LossKind::kMeanAbsoluteError;
    t.score_range = ScoreRange{0.0, 5.0};
    t.threshold = 2.5;
    t.class_sign_map = {{"neg_contrib", AttributionSign::kNegative},
                        {"pos_contrib", AttributionSign::kPositive}};
  } else {
    t.task_id = "synthetic_sentiment";
    t.loss = LossKind::kLogLoss;
    t.classes = {"negative", "positive"};
    t.threshold = 0.5;
    t.class_sign_map = {{"negative", AttributionSign::kNegative},
                        {"positive", AttributionSign::kPositive}};
  }
  cfg.annotators_per_sample = 3;
  return cfg;
}

inline EvaluationBundle GenerateSyntheticBundle(const SyntheticOptions& opt) {
  if (opt.n_samples < 1 || opt.n_methods < 1 || opt.n_annotators < 1)
    throw Error(ErrorKind::kUsage, "synthetic bundle sizes must be >= 1");
  if (!(opt.noise >= 0.0 && opt.noise <= 1.0))
    throw Error(ErrorKind::kUsage, "noise must lie in [0,1]", "noise");

  detail::FixtureRng rng(opt.seed);
  EvaluationBundle b;
  b.config = SyntheticTaskConfig(opt.kind);
  b.config.annotators_per_sample = opt.n_annotators;
  const TaskSpec& task = b.config.task;
  const bool regression = opt.kind == TaskKind::kRegression;
  const std::vector<ClassId> classes = task.feature_classes();

  for (int si = 0; si < opt.n_samples; ++si) {
    Sample s;
    s.sample_id = fmt::format("s{:03d}", si);
    s.task_id = task.task_id;
    const int n_segments = regression ? 2 : 1;
    for (int g = 0; g < n_segments; ++g) {
      auto& seg = s.segments.emplace_back();
      const int len = regression ? rng.Between(4, 9) : rng.Between(5, 14);
      for (int t = 0; t < len; ++t)
        seg.push_back(detail::kFixtureWords[rng.Between(0, detail::kFixtureWords.size() - 1)]);
    }
    const double model_output = regression ? rng.Uniform(0.0, 5.0) : rng.Uniform(0.02, 0.98);
    if (regression) {
      s.gold_label = std::round(rng.Uniform(0.0, 5.0) * 10.0) / 10.0;
    } else {
      s.gold_label = task.classes[rng.Uniform() < 0.5 ? 0 : 1];
    }
    const std::size_t n_tokens = s.token_count();
    const std::string checksum = TokensChecksum(s);

    for (int mi = 0; mi < opt.n_methods; ++mi) {
      AttributionExplanation e;
      e.sample_id = s.sample_id;
      e.method_id = fmt::format("method_{}", static_cast<char>('a' + mi % 26)) +
                    (mi >= 26 ? std::to_string(mi / 26) : "");
      e.tokens_checksum = checksum;
      e.model_output = model_output;
      if (!regression) e.model_label = task.ThresholdLabel(model_output);
      const double scale = 0.1 * (mi + 1);
      for (std::size_t t = 0; t < n_tokens; ++t) {
        const double sparsity = rng.Uniform();
        const double value = rng.Uniform(-1.0, 1.0) * scale;
        e.attributions.push_back(sparsity < 0.25 ? 0.0 : value);
      }
      const SignedFeatureSets method_sets =
          ExtractFeatureSets(e.attributions, task, b.config.extraction_policy);

      for (int ai = 0; ai < opt.n_annotators; ++ai) {
        AnnotationRecord a;
        a.sample_id = s.sample_id;
        a.method_id = e.method_id;
        a.annotator_id = fmt::format("annotator_{:02d}", ai);
        const bool perturb = rng.Uniform() < opt.noise;
        const double shift = rng.Uniform(-1.5, 1.5);
        if (regression) {
          a.q1_answer = perturb ? std::clamp(model_output + shift, 0.0, 5.0) : model_output;
        } else {
          const std::string& model_label = task.ThresholdLabel(model_output);
          a.q1_answer = perturb ? (model_label == task.classes[0] ? task.classes[1]
                                                                  : task.classes[0])
                                : model_label;
        }
        for (std::size_t t = 0; t < n_tokens; ++t) {
          const bool flip = rng.Uniform() < opt.noise;
          const ClassId& pick = classes[rng.Uniform() < 0.5 ? 0 : 1];
          if (!flip) continue;
          if (auto cls = method_sets.ClassOf(t)) {
            a.removals[*cls].insert(t);
          } else {
            a.additions[pick].insert(t);
          }
        }
        a.duration_secs = std::round(rng.Uniform(20.0, 400.0) * 10.0) / 10.0;
        b.annotations.push_back(std::move(a));
      }
      b.explanations.emplace(PairKey{e.sample_id, e.method_id}, std::move(e));
    }
    b.samples.emplace(s.sample_id, std::move(s));
  }
  return b;
}

}  // namespace iqs
