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

// Ranking tables, sweep tables, per-criterion averages and annotator
// agreement, plus deterministic rendering to TSV, JSON or Markdown.

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "iqs/alpha_sweep.hpp"
#include "iqs/error.hpp"
#include "iqs/ingestion.hpp"
#include "iqs/metrics.hpp"
#include "iqs/types.hpp"

namespace iqs {

// ---- ranking ---------------------------------------------------------------

struct RankingRow {
  std::string method_id;
  double scaled_plausibility = 0.0;
  double scaled_simplicity = 0.0;
  double scaled_reproducibility = 0.0;
  double iqs = 0.0;
};

struct RankingTable {
  std::string task_id;
  IQSWeights weights;
  std::vector<RankingRow> rows;  // IQS descending, then method_id ascending
};

inline RankingTable RankMethods(std::span<const MethodScorecard> cards,
                                const IQSWeights& w) {
  w.Validate();
  if (cards.empty()) throw Error(ErrorKind::kUsage, "no scorecards to rank");
  RankingTable table;
  table.task_id = cards.front().task_id;
  table.weights = w;
  for (const auto& c : cards) {
    if (c.task_id != table.task_id)
      throw Error(ErrorKind::kUsage, "cannot rank scorecards of tasks '" +
                                         table.task_id + "' and '" + c.task_id + "' together");
    RankingRow row;
    row.method_id = c.method_id;
    row.scaled_plausibility = w.alpha1 * c.plausibility;
    row.scaled_simplicity = w.alpha2 * c.simplicity;
    row.scaled_reproducibility = w.alpha3 * c.reproducibility;
    row.iqs = ComposeIqs(TermsOf(c), w);
    table.rows.push_back(row);
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const RankingRow& a, const RankingRow& b) {
    if (a.iqs != b.iqs) return a.iqs > b.iqs;
    return a.method_id < b.method_id;
  });
  return table;
}

// ---- agreement -------------------------------------------------------------

struct AgreementReport {
  std::string task_id;
  // Fraction of (sample, method) pairs where every annotator gave the same
  // effective label.
  double unanimous_rate = 0.0;
  // Mean over pairs of the fraction of agreeing annotator pairs.
  double pairwise_rate = 0.0;
  // Pairs that entered the rates; both rates are 0 when this is 0.
  std::size_t n_pairs = 0;
  // Pairs with fewer than two annotations.
  std::vector<PairKey> excluded;
};

// q1 answer reduced to a class: the class name, or for regression which
// side of the threshold the score falls on.
inline std::string EffectiveLabel(const Label& answer, const TaskSpec& task) {
  if (task.kind == TaskKind::kBinaryClassification) {
    const auto* name = std::get_if<std::string>(&answer);
    if (name == nullptr || !task.IsClass(*name))
      throw Error(ErrorKind::kData, "q1_answer is not a class of task '" + task.task_id + "'",
                  "q1_answer");
    return *name;
  }
  return HumanScore(answer, task) >= task.threshold ? "above_threshold" : "below_threshold";
}

inline AgreementReport AgreementRate(std::span<const AnnotationRecord> annotations,
                                     const TaskSpec& task) {
  // pair -> annotator -> label, ordered for determinism
  std::map<PairKey, std::map<std::string, std::string>> labels;
  for (const auto& a : annotations)
    labels[{a.sample_id, a.method_id}][a.annotator_id] = EffectiveLabel(a.q1_answer, task);

  AgreementReport report;
  report.task_id = task.task_id;
  double unanimous = 0.0;
  double pairwise = 0.0;
  for (const auto& [key, by_annotator] : labels) {
    if (by_annotator.size() < 2) {
      report.excluded.push_back(key);
      continue;
    }
    std::vector<std::string> v;
    for (const auto& [annotator, label] : by_annotator) v.push_back(label);
    std::size_t agree = 0, total = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        ++total;
        if (v[i] == v[j]) ++agree;
      }
    }
    pairwise += static_cast<double>(agree) / static_cast<double>(total);
    if (agree == total) unanimous += 1.0;
    ++report.n_pairs;
  }
  if (report.n_pairs > 0) {
    report.unanimous_rate = unanimous / static_cast<double>(report.n_pairs);
    report.pairwise_rate = pairwise / static_cast<double>(report.n_pairs);
  }
  return report;
}

// ---- per-criterion averages -------------------------------------------------

struct CriterionAverages {
  std::string method_id;
  double plausibility = 0.0;
  double simplicity = 0.0;
  double reproducibility = 0.0;
  std::size_t n_tasks = 0;
};

// Unweighted mean of each unscaled term across tasks, one row per method in
// method_id order. Every method must be scored on the same set of tasks.
inline std::vector<CriterionAverages> PerCriterionAverages(
    std::span<const MethodScorecard> cards) {
  if (cards.empty()) throw Error(ErrorKind::kUsage, "no scorecards to average");
  std::set<std::string> tasks;
  std::map<std::string, std::map<std::string, const MethodScorecard*>> cells;
  for (const auto& c : cards) {
    tasks.insert(c.task_id);
    if (!cells[c.method_id].emplace(c.task_id, &c).second)
      throw Error(ErrorKind::kUsage,
                  "two scorecards for (" + c.method_id + ", " + c.task_id + ")");
  }
  std::vector<CriterionAverages> out;
  for (const auto& [method, by_task] : cells) {
    for (const auto& t : tasks) {
      if (!by_task.contains(t))
        throw Error(ErrorKind::kUsage,
                    "method '" + method + "' has no scorecard for task '" + t + "'");
    }
    CriterionAverages avg;
    avg.method_id = method;
    for (const auto& [t, c] : by_task) {
      avg.plausibility += c->plausibility;
      avg.simplicity += c->simplicity;
      avg.reproducibility += c->reproducibility;
    }
    const double n = static_cast<double>(by_task.size());
    avg.plausibility /= n;
    avg.simplicity /= n;
    avg.reproducibility /= n;
    avg.n_tasks = by_task.size();
    out.push_back(avg);
  }
  return out;
}

// ---- rendering -------------------------------------------------------------

enum class OutputFormat { kTsv, kJsonDoc, kMarkdown };

inline OutputFormat ParseOutputFormat(const std::string& name) {
  if (name == "tsv") return OutputFormat::kTsv;
  if (name == "json" || name == "json_doc") return OutputFormat::kJsonDoc;
  if (name == "markdown" || name == "md") return OutputFormat::kMarkdown;
  throw Error(ErrorKind::kUsage, "unknown output format '" + name + "'", "format");
}

inline std::string FormatExtension(OutputFormat format) {
  switch (format) {
    case OutputFormat::kTsv: return "tsv";
    case OutputFormat::kJsonDoc: return "json";
    case OutputFormat::kMarkdown: return "md";
  }
  return "txt";
}

using Cell = std::variant<std::string, double, long long>;

struct TextTable {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

namespace detail {

inline std::string HumanCell(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* d = std::get_if<double>(&cell)) return fmt::format("{:.4f}", *d);
  return std::to_string(std::get<long long>(cell));
}

inline Json CellJson(const Cell& cell) {
  return std::visit([](const auto& v) { return Json(v); }, cell);
}

}  // namespace detail

inline std::string Render(const TextTable& table, OutputFormat format) {
  std::string out;
  switch (format) {
    case OutputFormat::kTsv: {
      for (std::size_t i = 0; i < table.columns.size(); ++i)
        out += (i ? "\t" : "") + table.columns[i];
      out += '\n';
      for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
          out += (i ? "\t" : "") + detail::HumanCell(row[i]);
        out += '\n';
      }
      break;
    }
    case OutputFormat::kMarkdown: {
      if (!table.title.empty()) out += "### " + table.title + "\n\n";
      out += "|";
      for (const auto& c : table.columns) out += " " + c + " |";
      out += "\n|";
      for (std::size_t i = 0; i < table.columns.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
      out += '\n';
      for (const auto& row : table.rows) {
        out += "|";
        for (const auto& cell : row) out += " " + detail::HumanCell(cell) + " |";
        out += '\n';
      }
      break;
    }
    case OutputFormat::kJsonDoc: {
      Json doc;
      doc["title"] = table.title;
      doc["columns"] = table.columns;
      doc["rows"] = Json::array();
      for (const auto& row : table.rows) {
        Json r = Json::object();
        for (std::size_t i = 0; i < row.size() && i < table.columns.size(); ++i)
          r[table.columns[i]] = detail::CellJson(row[i]);
        doc["rows"].push_back(std::move(r));
      }
      out = doc.dump(2) + "\n";
      break;
    }
  }
  return out;
}

inline std::string WeightsTag(const IQSWeights& w) {
  return fmt::format("{:.4f}-{:.4f}-{:.4f}", w.alpha1, w.alpha2, w.alpha3);
}

// `{task}_{weights}.{ext}`
inline std::string RankingFileName(const std::string& task_id, const IQSWeights& w,
                                   OutputFormat format) {
  return task_id + "_" + WeightsTag(w) + "." + FormatExtension(format);
}

inline TextTable ToTextTable(const RankingTable& t) {
  TextTable out;
  out.title = t.task_id + " ranking, weights " + WeightsTag(t.weights);
  out.columns = {"method", "plausibility", "simplicity", "reproducibility", "iqs"};
  for (const auto& r : t.rows)
    out.rows.push_back({r.method_id, r.scaled_plausibility, r.scaled_simplicity,
                        r.scaled_reproducibility, r.iqs});
  return out;
}

inline TextTable ToTextTable(std::span<const SweepStats> stats) {
  TextTable out;
  out.title = stats.empty() ? "weight sweep" : stats.front().task_id + " weight sweep";
  out.columns = {"method", "mean", "std_population", "std_sample", "n_combos"};
  for (const auto& s : stats)
    out.rows.push_back({s.method_id, s.mean, s.std_population, s.std_sample,
                        static_cast<long long>(s.n_combos)});
  return out;
}

inline TextTable ToTextTable(std::span<const CriterionAverages> averages) {
  TextTable out;
  out.title = "per-criterion averages across tasks";
  out.columns = {"method", "plausibility", "simplicity", "reproducibility", "n_tasks"};
  for (const auto& a : averages)
    out.rows.push_back({a.method_id, a.plausibility, a.simplicity, a.reproducibility,
                        static_cast<long long>(a.n_tasks)});
  return out;
}

inline TextTable ToTextTable(const AgreementReport& r) {
  TextTable out;
  out.title = r.task_id + " annotator agreement";
  out.columns = {"task", "unanimous_rate", "pairwise_rate", "n_pairs", "n_excluded"};
  out.rows.push_back({r.task_id, r.unanimous_rate, r.pairwise_rate,
                      static_cast<long long>(r.n_pairs),
                      static_cast<long long>(r.excluded.size())});
  return out;
}

// ---- scorecard documents ---------------------------------------------------

inline Json ScorecardToJson(const MethodScorecard& c) {
  Json j;
  j["method_id"] = c.method_id;
  j["task_id"] = c.task_id;
  j["plausibility"] = c.plausibility;
  j["simplicity"] = c.simplicity;
  j["reproducibility"] = c.reproducibility;
  j["iqs"] = c.iqs;
  j["weights"] = {c.weights.alpha1, c.weights.alpha2, c.weights.alpha3};
  j["n_samples"] = c.n_samples;
  j["n_annotators"] = c.n_annotators;
  return j;
}

inline std::string ScorecardsDocument(std::span<const MethodScorecard> cards) {
  Json doc;
  doc["scorecards"] = Json::array();
  for (const auto& c : cards) doc["scorecards"].push_back(ScorecardToJson(c));
  return doc.dump(2) + "\n";
}

// Reads a scorecards document. Terms must lie in [0,1]; `iqs` is recomputed
// from the terms and weights when absent and checked when present.
inline std::vector<MethodScorecard> LoadScorecards(const std::filesystem::path& path) {
  using namespace detail;
  const std::string file = path.string();
  const Json doc = ParseDocument(ReadFile(path), file);
  const Json& arr = Require(doc, "scorecards", {file, ""});
  if (!arr.is_array()) Fail(ErrorKind::kParse, {file, ""}, "scorecards", "expected an array");
  std::vector<MethodScorecard> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Where where{file, "record " + std::to_string(i + 1)};
    const Json& j = arr[i];
    MethodScorecard c;
    c.method_id = AsString(Require(j, "method_id", where), "method_id", where);
    c.task_id = AsString(Require(j, "task_id", where), "task_id", where);
    c.plausibility = AsNumber(Require(j, "plausibility", where), "plausibility", where);
    c.simplicity = AsNumber(Require(j, "simplicity", where), "simplicity", where);
    c.reproducibility =
        AsNumber(Require(j, "reproducibility", where), "reproducibility", where);
    for (double t : {c.plausibility, c.simplicity, c.reproducibility}) {
      if (t < 0.0 || t > 1.0) Fail(ErrorKind::kData, where, "", "term outside [0,1]");
    }
    if (const Json* w = Optional(j, "weights")) {
      if (!w->is_array() || w->size() != 3)
        Fail(ErrorKind::kParse, where, "weights", "expected [a1, a2, a3]");
      c.weights = {AsNumber((*w)[0], "weights", where), AsNumber((*w)[1], "weights", where),
                   AsNumber((*w)[2], "weights", where)};
    }
    try {
      c.weights.Validate();
    } catch (const Error& e) {
      Fail(ErrorKind::kConfig, where, "weights", e.what());
    }
    const double expected = ComposeIqs(TermsOf(c), c.weights);
    if (const Json* q = Optional(j, "iqs")) {
      c.iqs = AsNumber(*q, "iqs", where);
      if (std::abs(c.iqs - expected) > 1e-9)
        Fail(ErrorKind::kConsistency, where, "iqs", "does not equal the weighted term sum");
    } else {
      c.iqs = expected;
    }
    if (const Json* n = Optional(j, "n_samples")) c.n_samples = n->get<std::size_t>();
    if (const Json* n = Optional(j, "n_annotators")) c.n_annotators = n->get<std::size_t>();
    out.push_back(c);
  }
  return out;
}

}  // namespace iqs
