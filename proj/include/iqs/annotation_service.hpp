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

// Assignment, leasing and persistence of annotation work. Each
// (sample, method) pair has `annotators_per_sample` slots; an annotator
// leases at most one slot per pair, and a slot is completed by a validated
// submission that has been appended to the annotation file.
//
// All state transitions happen under one mutex. The HTTP binding lives in
// http_server.hpp.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "iqs/error.hpp"
#include "iqs/feature_extraction.hpp"
#include "iqs/ingestion.hpp"
#include "iqs/types.hpp"

namespace iqs {

struct ServiceConfig {
  int annotators_per_sample = 3;
  std::chrono::seconds lease_timeout{30 * 60};
  std::filesystem::path annotation_file;
  // When set, unknown annotator ids are registered on first use.
  bool open_registration = true;
};

struct SlotCounts {
  std::size_t completed = 0;
  std::size_t leased = 0;
  std::size_t pending = 0;

  std::size_t total() const { return completed + leased + pending; }
  bool operator==(const SlotCounts&) const = default;
};

struct ServiceProgress {
  std::string task_id;
  std::map<std::string, SlotCounts> by_method;
  SlotCounts total;
};

struct SubmitAck {
  std::string sample_id;
  std::string method_id;
  int slot = 0;  // 1-based
};

class AnnotationService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  AnnotationService(EvaluationBundle bundle, ServiceConfig config,
                    Clock clock = [] { return std::chrono::steady_clock::now(); })
      : bundle_(std::move(bundle)), config_(std::move(config)), clock_(std::move(clock)) {
    if (config_.annotators_per_sample < 1)
      throw Error(ErrorKind::kConfig, "annotators_per_sample must be >= 1",
                  "annotators_per_sample");
    if (config_.annotation_file.empty())
      throw Error(ErrorKind::kConfig, "annotation file path is required", "data_dir");
    bundle_.config.Validate();
    bundle_.annotations.clear();
    for (const auto& [key, e] : bundle_.explanations)
      slots_[key].resize(static_cast<std::size_t>(config_.annotators_per_sample));
    Replay();
  }

  const EvaluationBundle& bundle() const { return bundle_; }

  void RegisterAnnotator(const std::string& annotator_id) {
    CheckAnnotatorId(annotator_id);
    std::lock_guard lock(mu_);
    annotators_.insert(annotator_id);
  }

  // Leases the first open slot, in (sample_id, method_id) order, of a pair
  // this annotator has not taken yet. Returns the task payload, or nullopt
  // when nothing is left for this annotator.
  std::optional<Json> NextTask(const std::string& annotator_id) {
    std::lock_guard lock(mu_);
    RequireRegistered(annotator_id);
    const auto now = clock_();
    ExpireLeases(now);
    for (auto& [key, slots] : slots_) {
      bool taken = false;
      for (const auto& s : slots) {
        if (s.state != SlotState::kPending && s.annotator == annotator_id) taken = true;
      }
      if (taken) continue;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].state != SlotState::kPending) continue;
        slots[i].state = SlotState::kLeased;
        slots[i].annotator = annotator_id;
        slots[i].expires = now + config_.lease_timeout;
        return Payload(key, static_cast<int>(i) + 1);
      }
    }
    return std::nullopt;
  }

  // Validates and persists a response for a slot the annotator holds.
  SubmitAck SubmitResponse(const std::string& annotator_id, AnnotationRecord record) {
    std::lock_guard lock(mu_);
    RequireRegistered(annotator_id);
    if (record.annotator_id.empty()) record.annotator_id = annotator_id;
    if (record.annotator_id != annotator_id)
      throw Error(ErrorKind::kData, "annotator_id does not match the submitting annotator",
                  "annotator_id");
    ExpireLeases(clock_());
    const PairKey key{record.sample_id, record.method_id};
    auto it = slots_.find(key);
    if (it == slots_.end())
      throw Error(ErrorKind::kReferential,
                  "no task for (" + key.first + ", " + key.second + ")", "method_id");
    Slot* held = nullptr;
    int slot_no = 0;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      Slot& s = it->second[i];
      if (s.annotator != annotator_id) continue;
      if (s.state == SlotState::kCompleted)
        throw Error(ErrorKind::kLeaseConflict,
                    "response for (" + key.first + ", " + key.second +
                        ") already submitted by '" + annotator_id + "'");
      if (s.state == SlotState::kLeased) {
        held = &s;
        slot_no = static_cast<int>(i) + 1;
      }
    }
    if (held == nullptr)
      throw Error(ErrorKind::kLeaseConflict, "annotator '" + annotator_id +
                                                 "' holds no lease for (" + key.first +
                                                 ", " + key.second + ")");
    CheckAnnotation(record, bundle_);
    Append(record);
    held->state = SlotState::kCompleted;
    records_.push_back(std::move(record));
    return {key.first, key.second, slot_no};
  }

  ServiceProgress Progress() {
    std::lock_guard lock(mu_);
    ExpireLeases(clock_());
    ServiceProgress p;
    p.task_id = bundle_.task().task_id;
    for (const auto& [key, slots] : slots_) {
      SlotCounts& c = p.by_method[key.second];
      for (const auto& s : slots) {
        switch (s.state) {
          case SlotState::kCompleted: ++c.completed; ++p.total.completed; break;
          case SlotState::kLeased: ++c.leased; ++p.total.leased; break;
          case SlotState::kPending: ++c.pending; ++p.total.pending; break;
        }
      }
    }
    return p;
  }

  // Every persisted record, one JSON object per line, in acceptance order.
  std::string Export() const {
    std::lock_guard lock(mu_);
    return AnnotationLines(records_);
  }

  std::vector<AnnotationRecord> Records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

 private:
  enum class SlotState { kPending, kLeased, kCompleted };

  struct Slot {
    SlotState state = SlotState::kPending;
    std::string annotator;
    std::chrono::steady_clock::time_point expires{};
  };

  static void CheckAnnotatorId(const std::string& id) {
    if (id.empty() || id.find_first_of(" \t\r\n") != std::string::npos)
      throw Error(ErrorKind::kRegistration, "invalid annotator id '" + id + "'", "annotator");
  }

  void RequireRegistered(const std::string& id) {
    CheckAnnotatorId(id);
    if (annotators_.contains(id)) return;
    if (!config_.open_registration)
      throw Error(ErrorKind::kRegistration, "unknown annotator '" + id + "'", "annotator");
    annotators_.insert(id);
  }

  void ExpireLeases(std::chrono::steady_clock::time_point now) {
    for (auto& [key, slots] : slots_) {
      for (auto& s : slots) {
        if (s.state == SlotState::kLeased && now >= s.expires) {
          s.state = SlotState::kPending;
          s.annotator.clear();
        }
      }
    }
  }

  // Restores completed slots from an existing annotation file. Records that
  // repeat a (sample, method, annotator) triple are dropped.
  void Replay() {
    if (!std::filesystem::exists(config_.annotation_file)) return;
    EvaluationBundle scratch = bundle_;
    for (auto& rec : LoadAnnotationFile(config_.annotation_file)) {
      CheckAnnotation(rec, bundle_, {config_.annotation_file.string(), ""});
      if (!AddAnnotationDedup(scratch, rec)) continue;
      auto& slots = slots_.at({rec.sample_id, rec.method_id});
      for (auto& s : slots) {
        if (s.state == SlotState::kPending) {
          s.state = SlotState::kCompleted;
          s.annotator = rec.annotator_id;
          break;
        }
      }
      annotators_.insert(rec.annotator_id);
      records_.push_back(std::move(rec));
    }
  }

  void Append(const AnnotationRecord& record) {
    const auto& path = config_.annotation_file;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (f == nullptr)
      throw Error(ErrorKind::kUsage, "cannot open '" + path.string() + "' for append");
    const std::string line = AnnotationToJson(record).dump() + "\n";
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() &&
                    std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
    std::fclose(f);
    if (!ok) throw Error(ErrorKind::kUsage, "failed appending to '" + path.string() + "'");
  }

  Json Payload(const PairKey& key, int slot) const {
    const TaskSpec& task = bundle_.task();
    const Sample& sample = bundle_.samples.at(key.first);
    const AttributionExplanation& expl = bundle_.explanations.at(key);
    const SignedFeatureSets sets = bundle_.MethodSets(key.first, key.second);

    double max_abs = 0.0;
    for (double a : expl.attributions) max_abs = std::max(max_abs, std::abs(a));

    Json tokens = Json::array();
    const auto offsets = sample.segment_offsets();
    TokenIndex index = 0;
    for (std::size_t g = 0; g < sample.segments.size(); ++g) {
      for (const auto& text : sample.segments[g]) {
        Json t;
        t["index"] = index;
        t["segment"] = g;
        t["text"] = text;
        const auto cls = sets.ClassOf(index);
        if (cls) {
          t["class_id"] = *cls;
          t["highlight_class"] =
              task.class_sign_map.at(*cls) == AttributionSign::kPositive ? "pos" : "neg";
        } else {
          t["class_id"] = nullptr;
          t["highlight_class"] = "none";
        }
        t["intensity"] = max_abs > 0.0 ? std::abs(expl.attributions[index]) / max_abs : 0.0;
        tokens.push_back(std::move(t));
        ++index;
      }
    }

    const ClassId neg = task.ClassForSign(AttributionSign::kNegative);
    const ClassId pos = task.ClassForSign(AttributionSign::kPositive);
    Json questions = Json::array();
    if (task.kind == TaskKind::kBinaryClassification) {
      questions.push_back({{"id", "q1"},
                           {"text", fmt::format("Which label fits this example best: {} or {}?",
                                                task.classes[0], task.classes[1])}});
    } else {
      questions.push_back(
          {{"id", "q1"},
           {"text", fmt::format("What score between {} and {} would you give this example?",
                                task.score_range->lo, task.score_range->hi)}});
    }
    questions.push_back({{"id", "q2"}, {"class_id", neg}, {"mode", "remove"},
                         {"text", fmt::format("Select RED words that are not really '{}' evidence.", neg)}});
    questions.push_back({{"id", "q3"}, {"class_id", pos}, {"mode", "remove"},
                         {"text", fmt::format("Select GREEN words that are not really '{}' evidence.", pos)}});
    questions.push_back({{"id", "q4"}, {"class_id", neg}, {"mode", "add"},
                         {"text", fmt::format("Select unmarked words that should be RED ('{}').", neg)}});
    questions.push_back({{"id", "q5"}, {"class_id", pos}, {"mode", "add"},
                         {"text", fmt::format("Select unmarked words that should be GREEN ('{}').", pos)}});

    Json answer;
    if (task.kind == TaskKind::kBinaryClassification) {
      answer = {{"type", "binary_choice"}, {"options", task.classes}};
    } else {
      answer = {{"type", "numeric"},
                {"min", task.score_range->lo},
                {"max", task.score_range->hi},
                {"step", 0.1}};
    }

    Json p;
    p["sample_id"] = key.first;
    p["method_id"] = key.second;
    p["slot"] = slot;
    p["task_id"] = task.task_id;
    p["segments"] = sample.segments;
    p["segment_offsets"] = offsets;
    p["tokens"] = std::move(tokens);
    p["classes"] = {{{"class_id", neg}, {"highlight_class", "neg"}, {"color", "red"}},
                    {{"class_id", pos}, {"highlight_class", "pos"}, {"color", "green"}}};
    p["questions"] = std::move(questions);
    p["answer"] = std::move(answer);
    p["lease_expires_in_secs"] = config_.lease_timeout.count();
    return p;
  }

  EvaluationBundle bundle_;
  ServiceConfig config_;
  Clock clock_;

  mutable std::mutex mu_;
  std::map<PairKey, std::vector<Slot>> slots_;
  std::set<std::string> annotators_;
  std::vector<AnnotationRecord> records_;
};

inline Json ProgressToJson(const ServiceProgress& p) {
  auto counts = [](const SlotCounts& c) {
    return Json{{"completed", c.completed}, {"leased", c.leased}, {"pending", c.pending}};
  };
  Json j;
  j["task_id"] = p.task_id;
  j["methods"] = Json::object();
  for (const auto& [m, c] : p.by_method) j["methods"][m] = counts(c);
  j["total"] = counts(p.total);
  return j;
}

}  // namespace iqs
