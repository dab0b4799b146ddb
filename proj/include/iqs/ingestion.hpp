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

// File formats and cross-validation for evaluation bundles.
//
//   task config      JSON object
//   samples          JSON array of {sample_id, task_id, segments, gold_label?}
//   explanations     JSON array of {sample_id, method_id, tokens_checksum,
//                                   attributions, model_output, model_label?}
//   annotations      one JSON object per line:
//                    {sample_id, method_id, annotator_id, q1_answer,
//                     removals: {class: [index,...]}, additions: {...},
//                     duration_secs?}
//
// Every record is checked as it is read; errors carry the file and the
// line (annotations) or record number (array documents) of the culprit.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqs/error.hpp"
#include "iqs/feature_extraction.hpp"
#include "iqs/metrics.hpp"
#include "iqs/types.hpp"

namespace iqs {

using Json = nlohmann::json;

// Everything read from a task config file.
struct TaskConfig {
  TaskSpec task;
  ExtractionPolicy extraction_policy;
  SimplicityConfig simplicity;
  std::optional<IQSWeights> weights;
  int annotators_per_sample = 3;
  AggregationOrder aggregation = AggregationOrder::kPerSampleThenAnnotator;

  void Validate() const {
    task.Validate();
    extraction_policy.Validate();
    simplicity.Validate();
    if (weights) weights->Validate();
    if (annotators_per_sample < 1)
      throw Error(ErrorKind::kConfig, "annotators_per_sample must be >= 1",
                  "annotators_per_sample");
  }

  bool operator==(const TaskConfig&) const = default;
};

using PairKey = std::pair<std::string, std::string>;  // (sample_id, method_id)

struct EvaluationBundle {
  TaskConfig config;
  std::map<std::string, Sample> samples;
  std::map<PairKey, AttributionExplanation> explanations;
  std::vector<AnnotationRecord> annotations;

  const TaskSpec& task() const { return config.task; }

  std::vector<std::string> method_ids() const {
    std::set<std::string> ids;
    for (const auto& [key, e] : explanations) ids.insert(key.second);
    return {ids.begin(), ids.end()};
  }

  std::vector<Sample> sample_list() const {
    std::vector<Sample> out;
    for (const auto& [id, s] : samples) out.push_back(s);
    return out;
  }

  std::vector<AttributionExplanation> explanations_for(const std::string& method_id) const {
    std::vector<AttributionExplanation> out;
    for (const auto& [key, e] : explanations) {
      if (key.second == method_id) out.push_back(e);
    }
    return out;
  }

  SignedFeatureSets MethodSets(const std::string& sample_id,
                               const std::string& method_id) const {
    return ExtractFeatureSets(explanations.at({sample_id, method_id}),
                              samples.at(sample_id), config.task,
                              config.extraction_policy);
  }

  bool operator==(const EvaluationBundle&) const = default;
};

struct BundlePaths {
  std::filesystem::path task_config;
  std::filesystem::path samples;
  std::vector<std::filesystem::path> explanations;
  std::vector<std::filesystem::path> annotations;

  // Conventional layout of a data directory.
  static BundlePaths InDirectory(const std::filesystem::path& dir) {
    return {dir / "task.json", dir / "samples.json", {dir / "explanations.json"},
            {dir / "annotations.jsonl"}};
  }
};

namespace detail {

// Location of the record being read, for error messages.
struct Where {
  std::string file;
  std::string locator;  // "line 4" or "record 2"

  std::string str() const {
    if (file.empty() && locator.empty()) return "";
    if (locator.empty()) return file + ": ";
    return file + ":" + locator + ": ";
  }
};

[[noreturn]] inline void Fail(ErrorKind kind, const Where& where,
                              const std::string& field, const std::string& msg) {
  throw Error(kind,
              where.str() + (field.empty() ? "" : "field '" + field + "': ") + msg,
              field);
}

inline const Json& Require(const Json& obj, const std::string& field,
                           const Where& where) {
  if (!obj.is_object()) Fail(ErrorKind::kParse, where, "", "expected a JSON object");
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null())
    Fail(ErrorKind::kParse, where, field, "missing");
  return *it;
}

inline const Json* Optional(const Json& obj, const std::string& field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline std::string AsString(const Json& v, const std::string& field,
                            const Where& where, bool nonempty = true) {
  if (!v.is_string()) Fail(ErrorKind::kParse, where, field, "expected a string");
  std::string s = v.get<std::string>();
  if (nonempty && s.empty()) Fail(ErrorKind::kParse, where, field, "must not be empty");
  return s;
}

inline double AsNumber(const Json& v, const std::string& field, const Where& where) {
  if (!v.is_number()) Fail(ErrorKind::kParse, where, field, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) Fail(ErrorKind::kParse, where, field, "must be finite");
  return d;
}

inline TokenIndex AsIndex(const Json& v, const std::string& field, const Where& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
    Fail(ErrorKind::kParse, where, field, "token index must be a nonnegative integer");
  return static_cast<TokenIndex>(v.get<unsigned long long>());
}

inline Label AsLabel(const Json& v, const std::string& field, const Where& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return AsNumber(v, field, where);
  Fail(ErrorKind::kParse, where, field, "expected a class name or a number");
}

inline Json LabelToJson(const Label& label) {
  if (const auto* s = std::get_if<std::string>(&label)) return *s;
  return std::get<double>(label);
}

inline std::map<ClassId, IndexSet> AsClassIndexMap(const Json& v,
                                                   const std::string& field,
                                                   const Where& where) {
  if (!v.is_object())
    Fail(ErrorKind::kParse, where, field, "expected an object of class -> indices");
  std::map<ClassId, IndexSet> out;
  for (const auto& [cls, arr] : v.items()) {
    if (!arr.is_array()) Fail(ErrorKind::kParse, where, field, "expected index arrays");
    IndexSet& s = out[cls];
    for (const auto& i : arr) s.insert(AsIndex(i, field, where));
  }
  return out;
}

inline Json ClassIndexMapToJson(const std::map<ClassId, IndexSet>& m) {
  Json out = Json::object();
  for (const auto& [cls, s] : m) out[cls] = Json(std::vector<TokenIndex>(s.begin(), s.end()));
  return out;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::kUsage, "cannot open '" + path.string() + "'", "path");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json ParseDocument(const std::string& text, const std::string& file) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    Fail(ErrorKind::kParse, {file, "line " + std::to_string(line)}, "", e.what());
  }
}

template <typename Enum>
Enum ParseEnum(const Json& v, const std::string& field, const Where& where,
               std::initializer_list<std::pair<const char*, Enum>> names) {
  const std::string s = AsString(v, field, where);
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  Fail(ErrorKind::kParse, where, field, "unknown value '" + s + "'");
}

}  // namespace detail

// ---- task config -----------------------------------------------------------

inline std::string AggregationName(AggregationOrder order) {
  return order == AggregationOrder::kPooled ? "pooled" : "per_sample_then_annotator";
}

inline ExtractionPolicy ExtractionPolicyFromJson(const Json& v, const detail::Where& where) {
  try {
    if (v.is_string()) return ParseExtractionPolicy(v.get<std::string>());
    ExtractionPolicy p;
    p.mode = ParseExtractionMode(detail::AsString(detail::Require(v, "mode", where),
                                                  "extraction_policy.mode", where));
    p.value = detail::AsNumber(detail::Require(v, "value", where),
                               "extraction_policy.value", where);
    p.Validate();
    return p;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kParse) throw;
    detail::Fail(ErrorKind::kConfig, where, "extraction_policy", e.what());
  }
}

inline TaskConfig TaskConfigFromJson(const Json& j, const detail::Where& where = {}) {
  using detail::AsNumber;
  using detail::AsString;
  using detail::Optional;
  using detail::Require;
  TaskConfig cfg;
  TaskSpec& t = cfg.task;
  t.task_id = AsString(Require(j, "task_id", where), "task_id", where);
  t.kind = detail::ParseEnum<TaskKind>(
      Require(j, "kind", where), "kind", where,
      {{"binary_classification", TaskKind::kBinaryClassification},
       {"regression", TaskKind::kRegression}});
  if (const Json* c = Optional(j, "classes")) {
    if (!c->is_array()) detail::Fail(ErrorKind::kParse, where, "classes", "expected an array");
    for (const auto& name : *c) t.classes.push_back(AsString(name, "classes", where));
  }
  t.loss = detail::ParseEnum<LossKind>(
      Require(j, "loss", where), "loss", where,
      {{"log_loss", LossKind::kLogLoss},
       {"mean_absolute_error", LossKind::kMeanAbsoluteError}});
  if (const Json* r = Optional(j, "score_range")) {
    if (!r->is_array() || r->size() != 2)
      detail::Fail(ErrorKind::kParse, where, "score_range", "expected [lo, hi]");
    t.score_range = ScoreRange{AsNumber((*r)[0], "score_range", where),
                               AsNumber((*r)[1], "score_range", where)};
  }
  if (const Json* th = Optional(j, "threshold")) {
    t.threshold = AsNumber(*th, "threshold", where);
  } else if (t.score_range) {
    t.threshold = 0.5 * (t.score_range->lo + t.score_range->hi);
  }
  const Json& csm = Require(j, "class_sign_map", where);
  if (!csm.is_object())
    detail::Fail(ErrorKind::kParse, where, "class_sign_map", "expected an object");
  for (const auto& [cls, sign] : csm.items()) {
    t.class_sign_map[cls] = detail::ParseEnum<AttributionSign>(
        sign, "class_sign_map", where,
        {{"positive_attribution", AttributionSign::kPositive},
         {"negative_attribution", AttributionSign::kNegative}});
  }
  if (const Json* o = Optional(j, "output_transform")) {
    t.output_transform = detail::ParseEnum<OutputTransform>(
        *o, "output_transform", where,
        {{"identity", OutputTransform::kIdentity}, {"sigmoid", OutputTransform::kSigmoid}});
  }
  if (const Json* p = Optional(j, "extraction_policy"))
    cfg.extraction_policy = ExtractionPolicyFromJson(*p, where);
  if (const Json* b = Optional(j, "beta")) cfg.simplicity.beta = AsNumber(*b, "beta", where);
  if (const Json* w = Optional(j, "weights")) {
    if (!w->is_array() || w->size() != 3)
      detail::Fail(ErrorKind::kParse, where, "weights", "expected [a1, a2, a3]");
    cfg.weights = IQSWeights{AsNumber((*w)[0], "weights", where),
                             AsNumber((*w)[1], "weights", where),
                             AsNumber((*w)[2], "weights", where)};
  }
  if (const Json* k = Optional(j, "annotators_per_sample")) {
    if (!k->is_number_integer())
      detail::Fail(ErrorKind::kParse, where, "annotators_per_sample", "expected an integer");
    cfg.annotators_per_sample = k->get<int>();
  }
  if (const Json* a = Optional(j, "aggregation")) {
    cfg.aggregation = detail::ParseEnum<AggregationOrder>(
        *a, "aggregation", where,
        {{"per_sample_then_annotator", AggregationOrder::kPerSampleThenAnnotator},
         {"pooled", AggregationOrder::kPooled}});
  }
  try {
    cfg.Validate();
  } catch (const Error& e) {
    detail::Fail(e.kind(), where, e.field(), e.what());
  }
  return cfg;
}

inline Json TaskConfigToJson(const TaskConfig& cfg) {
  const TaskSpec& t = cfg.task;
  Json j;
  j["task_id"] = t.task_id;
  j["kind"] = t.kind == TaskKind::kRegression ? "regression" : "binary_classification";
  if (t.kind == TaskKind::kBinaryClassification) j["classes"] = t.classes;
  j["loss"] = t.loss == LossKind::kLogLoss ? "log_loss" : "mean_absolute_error";
  j["threshold"] = t.threshold;
  if (t.score_range) j["score_range"] = {t.score_range->lo, t.score_range->hi};
  Json csm = Json::object();
  for (const auto& [cls, sign] : t.class_sign_map)
    csm[cls] = sign == AttributionSign::kPositive ? "positive_attribution"
                                                  : "negative_attribution";
  j["class_sign_map"] = csm;
  j["output_transform"] =
      t.output_transform == OutputTransform::kSigmoid ? "sigmoid" : "identity";
  j["extraction_policy"] = {{"mode", ExtractionModeName(cfg.extraction_policy.mode)},
                            {"value", cfg.extraction_policy.value}};
  j["beta"] = cfg.simplicity.beta;
  if (cfg.weights)
    j["weights"] = {cfg.weights->alpha1, cfg.weights->alpha2, cfg.weights->alpha3};
  j["annotators_per_sample"] = cfg.annotators_per_sample;
  j["aggregation"] = AggregationName(cfg.aggregation);
  return j;
}

// ---- records ---------------------------------------------------------------

inline Sample SampleFromJson(const Json& j, const detail::Where& where) {
  using namespace detail;
  Sample s;
  s.sample_id = AsString(Require(j, "sample_id", where), "sample_id", where);
  s.task_id = AsString(Require(j, "task_id", where), "task_id", where);
  const Json& segs = Require(j, "segments", where);
  if (!segs.is_array()) Fail(ErrorKind::kParse, where, "segments", "expected an array");
  for (const auto& seg : segs) {
    if (!seg.is_array())
      Fail(ErrorKind::kParse, where, "segments", "expected arrays of tokens");
    auto& out = s.segments.emplace_back();
    for (const auto& tok : seg) out.push_back(AsString(tok, "segments", where, false));
  }
  if (const Json* g = Optional(j, "gold_label")) s.gold_label = AsLabel(*g, "gold_label", where);
  try {
    s.Validate();
  } catch (const Error& e) {
    Fail(e.kind(), where, e.field(), e.what());
  }
  return s;
}

inline Json SampleToJson(const Sample& s) {
  Json j;
  j["sample_id"] = s.sample_id;
  j["task_id"] = s.task_id;
  j["segments"] = s.segments;
  if (s.gold_label) j["gold_label"] = detail::LabelToJson(*s.gold_label);
  return j;
}

inline AttributionExplanation ExplanationFromJson(const Json& j,
                                                  const detail::Where& where) {
  using namespace detail;
  AttributionExplanation e;
  e.sample_id = AsString(Require(j, "sample_id", where), "sample_id", where);
  e.method_id = AsString(Require(j, "method_id", where), "method_id", where);
  e.tokens_checksum =
      AsString(Require(j, "tokens_checksum", where), "tokens_checksum", where);
  const Json& attrs = Require(j, "attributions", where);
  if (!attrs.is_array())
    Fail(ErrorKind::kParse, where, "attributions", "expected an array");
  for (const auto& a : attrs) e.attributions.push_back(AsNumber(a, "attributions", where));
  e.model_output = AsNumber(Require(j, "model_output", where), "model_output", where);
  if (const Json* l = Optional(j, "model_label"))
    e.model_label = AsString(*l, "model_label", where);
  return e;
}

inline Json ExplanationToJson(const AttributionExplanation& e) {
  Json j;
  j["sample_id"] = e.sample_id;
  j["method_id"] = e.method_id;
  j["tokens_checksum"] = e.tokens_checksum;
  j["attributions"] = e.attributions;
  j["model_output"] = e.model_output;
  if (e.model_label) j["model_label"] = *e.model_label;
  return j;
}

inline AnnotationRecord AnnotationFromJson(const Json& j, const detail::Where& where) {
  using namespace detail;
  AnnotationRecord a;
  a.sample_id = AsString(Require(j, "sample_id", where), "sample_id", where);
  a.method_id = AsString(Require(j, "method_id", where), "method_id", where);
  a.annotator_id = AsString(Require(j, "annotator_id", where), "annotator_id", where);
  a.q1_answer = AsLabel(Require(j, "q1_answer", where), "q1_answer", where);
  if (const Json* r = Optional(j, "removals")) a.removals = AsClassIndexMap(*r, "removals", where);
  if (const Json* r = Optional(j, "additions"))
    a.additions = AsClassIndexMap(*r, "additions", where);
  if (const Json* d = Optional(j, "duration_secs")) {
    a.duration_secs = AsNumber(*d, "duration_secs", where);
    if (*a.duration_secs < 0.0)
      Fail(ErrorKind::kParse, where, "duration_secs", "must be >= 0");
  }
  return a;
}

inline Json AnnotationToJson(const AnnotationRecord& a) {
  Json j;
  j["sample_id"] = a.sample_id;
  j["method_id"] = a.method_id;
  j["annotator_id"] = a.annotator_id;
  j["q1_answer"] = detail::LabelToJson(a.q1_answer);
  j["removals"] = detail::ClassIndexMapToJson(a.removals);
  j["additions"] = detail::ClassIndexMapToJson(a.additions);
  if (a.duration_secs) j["duration_secs"] = *a.duration_secs;
  return j;
}

// ---- record checks ---------------------------------------------------------

inline void CheckLabelForTask(const Label& label, const TaskSpec& task,
                              const std::string& field, const detail::Where& where) {
  if (task.kind == TaskKind::kBinaryClassification) {
    const auto* s = std::get_if<std::string>(&label);
    if (s == nullptr || !task.IsClass(*s))
      detail::Fail(ErrorKind::kData, where, field,
                   "must be one of the classes of task '" + task.task_id + "'");
  } else if (!std::holds_alternative<double>(label)) {
    detail::Fail(ErrorKind::kData, where, field, "regression tasks take a number");
  }
}

inline void CheckSample(const Sample& s, const TaskConfig& cfg,
                        const detail::Where& where) {
  if (s.task_id != cfg.task.task_id)
    detail::Fail(ErrorKind::kConsistency, where, "task_id",
                 "sample '" + s.sample_id + "' belongs to task '" + s.task_id +
                     "', expected '" + cfg.task.task_id + "'");
  if (s.gold_label) CheckLabelForTask(*s.gold_label, cfg.task, "gold_label", where);
}

inline void CheckExplanation(const AttributionExplanation& e, const EvaluationBundle& b,
                             const detail::Where& where) {
  auto it = b.samples.find(e.sample_id);
  if (it == b.samples.end())
    detail::Fail(ErrorKind::kReferential, where, "sample_id",
                 "explanation (" + e.sample_id + ", " + e.method_id +
                     ") references unknown sample '" + e.sample_id + "'");
  const Sample& s = it->second;
  if (e.attributions.size() != s.token_count())
    detail::Fail(ErrorKind::kConsistency, where, "attributions",
                 "explanation (" + e.sample_id + ", " + e.method_id + ") has " +
                     std::to_string(e.attributions.size()) +
                     " attributions for " + std::to_string(s.token_count()) + " tokens");
  if (e.tokens_checksum != TokensChecksum(s))
    detail::Fail(ErrorKind::kConsistency, where, "tokens_checksum",
                 "explanation (" + e.sample_id + ", " + e.method_id +
                     ") was computed on different tokens than sample '" + e.sample_id +
                     "'");
  if (!std::isfinite(e.model_output))
    detail::Fail(ErrorKind::kConsistency, where, "model_output", "must be finite");
  if (e.model_label) {
    if (b.task().kind != TaskKind::kBinaryClassification || !b.task().IsClass(*e.model_label))
      detail::Fail(ErrorKind::kData, where, "model_label",
                   "'" + *e.model_label + "' is not a class of task '" + b.task().task_id + "'");
  }
}

// Validates one annotation against the bundle it is about to join.
inline void CheckAnnotation(const AnnotationRecord& a, const EvaluationBundle& b,
                            const detail::Where& where = {}) {
  auto it = b.explanations.find({a.sample_id, a.method_id});
  if (it == b.explanations.end())
    detail::Fail(ErrorKind::kReferential, where, "method_id",
                 "annotation references unknown (sample, method) pair (" + a.sample_id +
                     ", " + a.method_id + ")");
  CheckLabelForTask(a.q1_answer, b.task(), "q1_answer", where);
  try {
    const SignedFeatureSets sets = b.MethodSets(a.sample_id, a.method_id);
    CheckAnnotationAgainst(sets, a, b.samples.at(a.sample_id).token_count());
    (void)DeriveHumanSets(sets, a);
  } catch (const Error& e) {
    detail::Fail(e.kind(), where, e.field(), e.what());
  }
}

// Appends `a` unless a record for the same (sample, method, annotator) is
// already present. Returns false for such duplicates.
inline bool AddAnnotationDedup(EvaluationBundle& b, AnnotationRecord a,
                               std::vector<std::string>* warnings = nullptr) {
  for (const auto& existing : b.annotations) {
    if (existing.sample_id == a.sample_id && existing.method_id == a.method_id &&
        existing.annotator_id == a.annotator_id) {
      if (!(existing == a) && warnings != nullptr)
        warnings->push_back("conflicting duplicate annotation (" + a.sample_id + ", " +
                            a.method_id + ", " + a.annotator_id + "); kept the first");
      return false;
    }
  }
  b.annotations.push_back(std::move(a));
  return true;
}

// Re-checks every record of an in-memory bundle.
inline void CheckBundle(const EvaluationBundle& b) {
  b.config.Validate();
  for (const auto& [id, s] : b.samples) {
    detail::Where where{"", "sample " + id};
    if (id != s.sample_id)
      detail::Fail(ErrorKind::kStructural, where, "sample_id", "key mismatch");
    s.Validate();
    CheckSample(s, b.config, where);
  }
  for (const auto& [key, e] : b.explanations)
    CheckExplanation(e, b, {"", "explanation " + key.first + "/" + key.second});
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& a : b.annotations) {
    detail::Where where{"", "annotation " + a.sample_id + "/" + a.method_id + "/" +
                                a.annotator_id};
    if (!seen.emplace(a.sample_id, a.method_id, a.annotator_id).second)
      detail::Fail(ErrorKind::kStructural, where, "annotator_id", "duplicate annotation");
    CheckAnnotation(a, b, where);
  }
}

// ---- files -----------------------------------------------------------------

inline TaskConfig LoadTaskConfig(const std::filesystem::path& path) {
  const std::string file = path.string();
  return TaskConfigFromJson(detail::ParseDocument(detail::ReadFile(path), file),
                            {file, ""});
}

namespace detail {

template <typename Fn>
void ForEachArrayRecord(const std::filesystem::path& path, Fn&& fn) {
  const std::string file = path.string();
  const Json doc = ParseDocument(ReadFile(path), file);
  if (!doc.is_array())
    Fail(ErrorKind::kParse, {file, ""}, "", "expected a JSON array of records");
  for (std::size_t i = 0; i < doc.size(); ++i)
    fn(doc[i], Where{file, "record " + std::to_string(i + 1)});
}

template <typename Fn>
void ForEachLine(const std::filesystem::path& path, Fn&& fn) {
  const std::string file = path.string();
  std::istringstream in(ReadFile(path));
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Where where{file, "line " + std::to_string(n)};
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      Fail(ErrorKind::kParse, where, "", e.what());
    }
    fn(j, where);
  }
}

// One record per line inside a JSON array.
inline std::string ArrayDocument(const std::vector<Json>& records) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += records[i].dump();
    out += i + 1 < records.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

inline void WriteFile(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kUsage, "cannot write '" + path.string() + "'", "path");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorKind::kUsage, "failed writing '" + path.string() + "'", "path");
}

}  // namespace detail

inline std::vector<AnnotationRecord> LoadAnnotationFile(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  detail::ForEachLine(path, [&](const Json& j, const detail::Where& where) {
    out.push_back(AnnotationFromJson(j, where));
  });
  return out;
}

// Loads and cross-validates a bundle. Annotation files that are listed must
// exist; an empty list yields a bundle without annotations.
inline EvaluationBundle LoadBundle(const BundlePaths& paths,
                                   std::vector<std::string>* warnings = nullptr) {
  EvaluationBundle b;
  b.config = LoadTaskConfig(paths.task_config);

  detail::ForEachArrayRecord(paths.samples, [&](const Json& j, const detail::Where& where) {
    Sample s = SampleFromJson(j, where);
    CheckSample(s, b.config, where);
    const std::string id = s.sample_id;
    if (!b.samples.emplace(id, std::move(s)).second)
      detail::Fail(ErrorKind::kStructural, where, "sample_id",
                   "duplicate sample '" + id + "'");
  });

  for (const auto& path : paths.explanations) {
    detail::ForEachArrayRecord(path, [&](const Json& j, const detail::Where& where) {
      AttributionExplanation e = ExplanationFromJson(j, where);
      CheckExplanation(e, b, where);
      PairKey key{e.sample_id, e.method_id};
      if (!b.explanations.emplace(key, std::move(e)).second)
        detail::Fail(ErrorKind::kStructural, where, "method_id",
                     "duplicate explanation (" + key.first + ", " + key.second + ")");
    });
  }

  for (const auto& path : paths.annotations) {
    detail::ForEachLine(path, [&](const Json& j, const detail::Where& where) {
      AnnotationRecord a = AnnotationFromJson(j, where);
      CheckAnnotation(a, b, where);
      AddAnnotationDedup(b, std::move(a), warnings);
    });
  }
  return b;
}

inline std::string AnnotationLines(const std::vector<AnnotationRecord>& records) {
  std::string out;
  for (const auto& a : records) {
    out += AnnotationToJson(a).dump();
    out += '\n';
  }
  return out;
}

// Writes the conventional directory layout and returns its paths.
inline BundlePaths SaveBundle(const EvaluationBundle& b, const std::filesystem::path& dir) {
  const BundlePaths paths = BundlePaths::InDirectory(dir);
  std::vector<Json> samples, explanations;
  for (const auto& [id, s] : b.samples) samples.push_back(SampleToJson(s));
  for (const auto& [key, e] : b.explanations) explanations.push_back(ExplanationToJson(e));
  detail::WriteFile(paths.task_config, TaskConfigToJson(b.config).dump(2) + "\n");
  detail::WriteFile(paths.samples, detail::ArrayDocument(samples));
  detail::WriteFile(paths.explanations.front(), detail::ArrayDocument(explanations));
  detail::WriteFile(paths.annotations.front(), AnnotationLines(b.annotations));
  return paths;
}

// ---- coverage --------------------------------------------------------------

struct CoverageDeficiency {
  std::string sample_id;
  std::string method_id;
  std::size_t have = 0;
  std::size_t need = 0;

  bool operator==(const CoverageDeficiency&) const = default;
};

struct CoverageReport {
  std::vector<CoverageDeficiency> deficiencies;
  // (sample, method) pairs where the method has no explanation.
  std::vector<PairKey> missing_explanations;

  bool ready() const { return deficiencies.empty() && missing_explanations.empty(); }
};

inline CoverageReport ValidateBundle(const EvaluationBundle& b, int annotators_per_sample) {
  if (annotators_per_sample < 1)
    throw Error(ErrorKind::kUsage, "annotators_per_sample must be >= 1");
  std::map<PairKey, std::set<std::string>> annotators;
  for (const auto& a : b.annotations)
    annotators[{a.sample_id, a.method_id}].insert(a.annotator_id);

  CoverageReport report;
  const auto need = static_cast<std::size_t>(annotators_per_sample);
  for (const auto& [sample_id, s] : b.samples) {
    for (const auto& method_id : b.method_ids()) {
      const PairKey key{sample_id, method_id};
      if (!b.explanations.contains(key)) {
        report.missing_explanations.push_back(key);
        continue;
      }
      auto it = annotators.find(key);
      const std::size_t have = it == annotators.end() ? 0 : it->second.size();
      if (have < need) report.deficiencies.push_back({sample_id, method_id, have, need});
    }
  }
  return report;
}

// Scores every method of a bundle with its own configuration.
inline std::vector<MethodScorecard> ScoreBundle(const EvaluationBundle& b,
                                                const IQSWeights& w,
                                                std::vector<std::string>* warnings = nullptr) {
  const std::vector<Sample> samples = b.sample_list();
  ScoringOptions options;
  options.aggregation = b.config.aggregation;
  std::vector<MethodScorecard> out;
  for (const auto& method_id : b.method_ids()) {
    const auto expl = b.explanations_for(method_id);
    out.push_back(ScoreMethod(b.task(), samples, expl, b.annotations,
                              b.config.extraction_policy, b.config.simplicity, w,
                              options, warnings));
  }
  return out;
}

}  // namespace iqs
