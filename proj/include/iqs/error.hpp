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

#include <stdexcept>
#include <string>
#include <string_view>

namespace iqs {

// Category of a failure. The CLI maps these onto exit codes and the
// annotation service onto HTTP statuses.
enum class ErrorKind {
  kUsage,
  kConfig,
  kParse,
  kStructural,
  kReferential,
  kConsistency,
  kData,
  kAnnotationConflict,
  kIncompleteCoverage,
  kLeaseConflict,
  kRegistration,
};

constexpr std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kStructural: return "structural";
    case ErrorKind::kReferential: return "referential";
    case ErrorKind::kConsistency: return "consistency";
    case ErrorKind::kData: return "data";
    case ErrorKind::kAnnotationConflict: return "annotation-conflict";
    case ErrorKind::kIncompleteCoverage: return "incomplete-coverage";
    case ErrorKind::kLeaseConflict: return "conflict";
    case ErrorKind::kRegistration: return "registration";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(ErrorKindName(kind)) + " error: " +
                           message),
        kind_(kind),
        field_(std::move(field)) {}

  ErrorKind kind() const { return kind_; }
  // Name of the offending field, when one can be singled out.
  const std::string& field() const { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace iqs
