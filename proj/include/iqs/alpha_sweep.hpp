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

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "iqs/error.hpp"
#include "iqs/metrics.hpp"
#include "iqs/types.hpp"

namespace iqs {

// A point of the weight simplex held as integer parts of `denominator`, so
// that parts[0] + parts[1] + parts[2] == denominator exactly.
struct SimplexPoint {
  std::array<int, 3> parts{};
  int denominator = 1;

  IQSWeights weights() const {
    const double d = denominator;
    return {parts[0] / d, parts[1] / d, parts[2] / d};
  }

  bool operator==(const SimplexPoint&) const = default;
};

// All weight triples on the grid {0, step, ..., 1}^3 summing to 1, in
// lexicographic order. `step` must be 1/k for a positive integer k.
inline std::vector<SimplexPoint> GenerateWeightGrid(double step) {
  if (!(step > 0.0) || !(step <= 1.0))
    throw Error(ErrorKind::kUsage, "grid step must lie in (0,1]", "step");
  const double inv = 1.0 / step;
  const long k = std::lround(inv);
  if (k < 1 || std::abs(inv - static_cast<double>(k)) > 1e-9 * inv)
    throw Error(ErrorKind::kUsage,
                "grid step " + std::to_string(step) + " does not divide 1", "step");
  std::vector<SimplexPoint> grid;
  const int n = static_cast<int>(k);
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; a + b <= n; ++b) {
      grid.push_back({{a, b, n - a - b}, n});
    }
  }
  return grid;
}

struct SweepStats {
  std::string method_id;
  std::string task_id;
  double mean = 0.0;
  double std_population = 0.0;
  // Only defined for n_combos >= 2; 0 otherwise.
  double std_sample = 0.0;
  std::size_t n_combos = 0;
};

// Mean and spread of the composite score over every grid weighting.
inline SweepStats Sweep(const TermTriple& terms, std::span<const SimplexPoint> grid) {
  if (grid.empty()) throw Error(ErrorKind::kUsage, "empty weight grid", "step");
  std::vector<double> values;
  values.reserve(grid.size());
  double sum = 0.0;
  for (const auto& point : grid) {
    values.push_back(ComposeIqs(terms, point.weights()));
    sum += values.back();
  }
  const double n = static_cast<double>(values.size());
  SweepStats stats;
  stats.n_combos = values.size();
  stats.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
  stats.std_population = std::sqrt(ss / n);
  stats.std_sample = values.size() >= 2 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return stats;
}

inline SweepStats Sweep(const MethodScorecard& card, std::span<const SimplexPoint> grid) {
  SweepStats stats = Sweep(TermsOf(card), grid);
  stats.method_id = card.method_id;
  stats.task_id = card.task_id;
  return stats;
}

}  // namespace iqs
