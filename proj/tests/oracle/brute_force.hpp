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

// Brute-force recomputation of method scorecards, kept independent of the
// library's scoring path: its own extraction, set algebra, term formulas and
// aggregation loops. Only the plain data structs are shared.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "iqs/ingestion.hpp"

namespace iqs::testing {

struct OracleTerms {
  double plausibility;
  double simplicity;
  double reproducibility;
};

// Relative-threshold extraction only; that is what the fixtures use.
inline std::map<std::string, std::set<std::size_t>> OracleExtract(
    const std::vector<double>& attr, const TaskConfig& cfg) {
  if (cfg.extraction_policy.mode != ExtractionMode::kRelativeThreshold)
    throw std::logic_error("oracle handles relative_threshold only");
  std::string pos, neg;
  for (const auto& [cls, sign] : cfg.task.class_sign_map)
    (sign == AttributionSign::kPositive ? pos : neg) = cls;
  std::map<std::string, std::set<std::size_t>> out{{pos, {}}, {neg, {}}};
  double m = 0.0;
  for (double a : attr) m = std::max(m, std::fabs(a));
  if (m == 0.0) return out;
  const double cut = cfg.extraction_policy.value * m;
  for (std::size_t i = 0; i < attr.size(); ++i) {
    if (attr[i] > 0.0 && attr[i] >= cut) out[pos].insert(i);
    if (attr[i] < 0.0 && -attr[i] >= cut) out[neg].insert(i);
  }
  return out;
}

inline double OracleJaccard(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  std::vector<std::size_t> i, u;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(i));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  if (u.empty()) return 1.0;
  return static_cast<double>(i.size()) / static_cast<double>(u.size());
}

inline OracleTerms OracleScore(const EvaluationBundle& b, const std::string& method) {
  const TaskConfig& cfg = b.config;
  const double beta = cfg.simplicity.beta;

  // Annotations for this method, keyed by sample then annotator.
  std::map<std::string, std::map<std::string, AnnotationRecord>> by_sample;
  for (const auto& a : b.annotations)
    if (a.method_id == method) by_sample[a.sample_id][a.annotator_id] = a;

  double plaus_total = 0.0, simp_total = 0.0;
  std::map<std::string, std::vector<std::pair<double, double>>> reg_pairs;
  std::map<std::string, std::vector<std::pair<int, double>>> cls_pairs;

  for (const auto& [sid, sample] : b.samples) {
    const auto& expl = b.explanations.at({sid, method});
    auto msets = OracleExtract(expl.attributions, cfg);

    std::size_t chunks = 0;
    for (const auto& [c, s] : msets) chunks += s.size();
    const double n = static_cast<double>(chunks);
    simp_total += n <= beta + 1.0 ? 1.0 : 1.0 / (std::log(n - beta) + 1.0);

    double per_sample = 0.0;
    for (const auto& [aid, ann] : by_sample.at(sid)) {
      double jsum = 0.0;
      for (const auto& [c, mset] : msets) {
        std::set<std::size_t> h = mset;
        if (ann.removals.count(c))
          for (auto i : ann.removals.at(c)) h.erase(i);
        if (ann.additions.count(c))
          for (auto i : ann.additions.at(c)) h.insert(i);
        jsum += OracleJaccard(h, mset);
      }
      per_sample += jsum / static_cast<double>(msets.size());

      if (cfg.task.kind == TaskKind::kRegression) {
        double h = std::get<double>(ann.q1_answer);
        h = std::min(std::max(h, cfg.task.score_range->lo), cfg.task.score_range->hi);
        reg_pairs[aid].push_back({h, expl.model_output});
      } else {
        const int y = std::get<std::string>(ann.q1_answer) == cfg.task.classes[1] ? 1 : 0;
        cls_pairs[aid].push_back({y, expl.model_output});
      }
    }
    plaus_total += per_sample / static_cast<double>(by_sample.at(sid).size());
  }

  double repro_total = 0.0;
  std::size_t n_annotators = 0;
  for (const auto& [aid, pairs] : reg_pairs) {
    double l = 0.0;
    for (const auto& [h, m] : pairs) l += std::fabs(h - m);
    l /= static_cast<double>(pairs.size());
    repro_total += 1.0 / (l + 1.0);
    ++n_annotators;
  }
  for (const auto& [aid, pairs] : cls_pairs) {
    double l = 0.0;
    for (const auto& [y, p0] : pairs) {
      const double p = std::min(std::max(p0, 1e-12), 1.0 - 1e-12);
      l += y == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    l /= static_cast<double>(pairs.size());
    repro_total += 1.0 / (l + 1.0);
    ++n_annotators;
  }

  const double ns = static_cast<double>(b.samples.size());
  return {plaus_total / ns, simp_total / ns, repro_total / static_cast<double>(n_annotators)};
}

// Mean and both standard deviations of the composite over the step-1/k grid,
// enumerated with two nested loops.
struct OracleSweep {
  double mean, std_population, std_sample;
  int n;
};

inline OracleSweep OracleGridStats(double p, double s, double r, int k) {
  std::vector<double> v;
  for (int i = 0; i <= k; ++i)
    for (int j = 0; i + j <= k; ++j) {
      const double a1 = static_cast<double>(i) / k;
      const double a2 = static_cast<double>(j) / k;
      const double a3 = static_cast<double>(k - i - j) / k;
      v.push_back(a1 * p + a2 * s + a3 * r);
    }
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size())),
          std::sqrt(ss / static_cast<double>(v.size() - 1)), static_cast<int>(v.size())};
}

}  // namespace iqs::testing
