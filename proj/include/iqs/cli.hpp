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

// Command-line entry point: validate, compute, sweep, report, serve, fixture.
//
// Settings come from an optional run-config JSON document (--config) and
// are overridden by flags. Relative paths in the document resolve against
// the document's directory. Every command renders all of its outputs in
// memory before writing any file, so a failing run leaves nothing behind.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "iqs/alpha_sweep.hpp"
#include "iqs/annotation_service.hpp"
#include "iqs/error.hpp"
#include "iqs/http_server.hpp"
#include "iqs/ingestion.hpp"
#include "iqs/report.hpp"
#include "iqs/synthetic.hpp"

namespace iqs::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotReady = 1;
inline constexpr int kExitError = 2;

struct RunConfig {
  std::optional<fs::path> task_config;
  std::optional<fs::path> samples;
  std::vector<fs::path> explanations;
  std::vector<fs::path> annotations;
  std::optional<fs::path> data_dir;
  std::vector<fs::path> scorecards;
  std::optional<IQSWeights> weights;
  double step = 0.1;
  std::optional<ExtractionPolicy> policy;
  std::optional<double> beta;
  fs::path out = "out";
  OutputFormat format = OutputFormat::kMarkdown;
  std::uint64_t seed = 42;
  int port = 8080;
  std::string host = "0.0.0.0";
  std::optional<fs::path> static_dir;
  int lease_timeout_secs = 30 * 60;
  // fixture
  int n_samples = 10;
  int n_methods = 2;
  int n_annotators = 3;
  double noise = 0.2;
  TaskKind fixture_kind = TaskKind::kRegression;
};

inline IQSWeights ParseWeights(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kUsage, "bad weight '" + part + "'", "weights");
    }
  }
  if (v.size() != 3) throw Error(ErrorKind::kUsage, "--weights takes a,b,c", "weights");
  return IQSWeights::Checked(v[0], v[1], v[2]);
}

inline RunConfig LoadRunConfig(const fs::path& path) {
  const std::string file = path.string();
  const Json j = detail::ParseDocument(detail::ReadFile(path), file);
  const detail::Where where{file, ""};
  const fs::path base = path.parent_path();
  auto resolve = [&](const Json& v, const char* field) {
    fs::path p = detail::AsString(v, field, where);
    return p.is_absolute() ? p : base / p;
  };
  auto resolve_list = [&](const char* field) {
    std::vector<fs::path> out;
    if (const Json* v = detail::Optional(j, field)) {
      if (v->is_string()) {
        out.push_back(resolve(*v, field));
      } else {
        for (const auto& e : *v) out.push_back(resolve(e, field));
      }
    }
    return out;
  };
  RunConfig cfg;
  if (const Json* v = detail::Optional(j, "task_config")) cfg.task_config = resolve(*v, "task_config");
  if (const Json* v = detail::Optional(j, "samples")) cfg.samples = resolve(*v, "samples");
  cfg.explanations = resolve_list("explanations");
  cfg.annotations = resolve_list("annotations");
  cfg.scorecards = resolve_list("scorecards");
  if (const Json* v = detail::Optional(j, "data_dir")) cfg.data_dir = resolve(*v, "data_dir");
  if (const Json* v = detail::Optional(j, "out")) cfg.out = resolve(*v, "out");
  if (const Json* v = detail::Optional(j, "static_dir")) cfg.static_dir = resolve(*v, "static_dir");
  if (const Json* v = detail::Optional(j, "weights")) {
    if (v->is_string()) {
      cfg.weights = ParseWeights(v->get<std::string>());
    } else {
      if (!v->is_array() || v->size() != 3)
        detail::Fail(ErrorKind::kParse, where, "weights", "expected [a1, a2, a3]");
      cfg.weights = IQSWeights::Checked(detail::AsNumber((*v)[0], "weights", where),
                                        detail::AsNumber((*v)[1], "weights", where),
                                        detail::AsNumber((*v)[2], "weights", where));
    }
  }
  if (const Json* v = detail::Optional(j, "step")) cfg.step = detail::AsNumber(*v, "step", where);
  if (const Json* v = detail::Optional(j, "policy"))
    cfg.policy = ExtractionPolicyFromJson(*v, where);
  if (const Json* v = detail::Optional(j, "beta")) cfg.beta = detail::AsNumber(*v, "beta", where);
  if (const Json* v = detail::Optional(j, "format"))
    cfg.format = ParseOutputFormat(detail::AsString(*v, "format", where));
  if (const Json* v = detail::Optional(j, "seed")) cfg.seed = v->get<std::uint64_t>();
  if (const Json* v = detail::Optional(j, "port")) cfg.port = v->get<int>();
  if (const Json* v = detail::Optional(j, "lease_timeout_secs"))
    cfg.lease_timeout_secs = v->get<int>();
  return cfg;
}

inline BundlePaths ResolveBundlePaths(const RunConfig& cfg, bool with_annotations) {
  BundlePaths paths;
  if (cfg.data_dir) paths = BundlePaths::InDirectory(*cfg.data_dir);
  if (cfg.task_config) paths.task_config = *cfg.task_config;
  if (cfg.samples) paths.samples = *cfg.samples;
  if (!cfg.explanations.empty()) paths.explanations = cfg.explanations;
  if (!cfg.annotations.empty()) paths.annotations = cfg.annotations;
  if (paths.task_config.empty() || paths.samples.empty() || paths.explanations.empty())
    throw Error(ErrorKind::kUsage,
                "no bundle given: pass --data-dir or name the files in --config");
  if (!with_annotations) paths.annotations.clear();
  return paths;
}

// Loads the bundle and applies --beta / --policy overrides.
inline EvaluationBundle LoadForRun(const RunConfig& cfg, bool with_annotations,
                                   std::vector<std::string>* warnings) {
  EvaluationBundle b = LoadBundle(ResolveBundlePaths(cfg, with_annotations), warnings);
  bool changed = false;
  if (cfg.beta) {
    b.config.simplicity.beta = *cfg.beta;
    changed = true;
  }
  if (cfg.policy) {
    b.config.extraction_policy = *cfg.policy;
    changed = true;
  }
  if (changed) CheckBundle(b);
  return b;
}

inline IQSWeights EffectiveWeights(const RunConfig& cfg, const TaskConfig* task) {
  if (cfg.weights) return *cfg.weights;
  if (task != nullptr && task->weights) return *task->weights;
  return IQSWeights::Equal();
}

// Pending output files, written only once everything has rendered.
class OutputSet {
 public:
  void Add(const fs::path& path, std::string content) { files_[path] = std::move(content); }

  void Commit(std::ostream& log) const {
    for (const auto& [path, content] : files_) {
      detail::WriteFile(path, content);
      log << "wrote " << path.string() << "\n";
    }
  }

 private:
  std::map<fs::path, std::string> files_;
};

inline void PrintWarnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

inline void PrintCoverage(const CoverageReport& report, std::ostream& os) {
  for (const auto& [sample, method] : report.missing_explanations)
    os << "missing explanation: sample '" << sample << "' method '" << method << "'\n";
  for (const auto& d : report.deficiencies)
    os << "insufficient annotations: sample '" << d.sample_id << "' method '"
       << d.method_id << "' has " << d.have << " of " << d.need << "\n";
}

inline int CmdValidate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const EvaluationBundle b = LoadForRun(cfg, true, &warnings);
  PrintWarnings(warnings, err);
  const CoverageReport report = ValidateBundle(b, b.config.annotators_per_sample);
  out << fmt::format("task {}: {} samples, {} methods, {} explanations, {} annotations\n",
                     b.task().task_id, b.samples.size(), b.method_ids().size(),
                     b.explanations.size(), b.annotations.size());
  if (report.ready()) {
    out << "coverage complete (" << b.config.annotators_per_sample
        << " annotators per sample)\n";
    return kExitOk;
  }
  PrintCoverage(report, out);
  return kExitNotReady;
}

inline int CmdCompute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const EvaluationBundle b = LoadForRun(cfg, true, &warnings);
  const CoverageReport coverage = ValidateBundle(b, b.config.annotators_per_sample);
  if (!coverage.ready()) {
    PrintCoverage(coverage, err);
    return kExitNotReady;
  }
  const IQSWeights w = EffectiveWeights(cfg, &b.config);
  const std::vector<MethodScorecard> cards = ScoreBundle(b, w, &warnings);
  PrintWarnings(warnings, err);
  const RankingTable ranking = RankMethods(cards, w);
  const std::string task = b.task().task_id;

  OutputSet outputs;
  outputs.Add(cfg.out / (task + "_scorecards.json"), ScorecardsDocument(cards));
  outputs.Add(cfg.out / RankingFileName(task, w, cfg.format),
              Render(ToTextTable(ranking), cfg.format));
  const AgreementReport agreement = AgreementRate(b.annotations, b.task());
  if (agreement.n_pairs > 0)
    outputs.Add(cfg.out / (task + "_agreement." + FormatExtension(cfg.format)),
                Render(ToTextTable(agreement), cfg.format));
  outputs.Commit(err);
  out << Render(ToTextTable(ranking), OutputFormat::kMarkdown);
  return kExitOk;
}

// Scorecards from --scorecards documents, or computed from the bundle.
inline std::vector<MethodScorecard> ScorecardsForRun(const RunConfig& cfg,
                                                     std::ostream& err) {
  if (!cfg.scorecards.empty()) {
    std::vector<MethodScorecard> cards;
    for (const auto& p : cfg.scorecards) {
      auto more = LoadScorecards(p);
      cards.insert(cards.end(), more.begin(), more.end());
    }
    return cards;
  }
  std::vector<std::string> warnings;
  const EvaluationBundle b = LoadForRun(cfg, true, &warnings);
  const CoverageReport coverage = ValidateBundle(b, b.config.annotators_per_sample);
  if (!coverage.ready()) {
    PrintCoverage(coverage, err);
    throw Error(ErrorKind::kIncompleteCoverage, "bundle is not fully annotated");
  }
  auto cards = ScoreBundle(b, EffectiveWeights(cfg, &b.config), &warnings);
  PrintWarnings(warnings, err);
  return cards;
}

inline std::map<std::string, std::vector<MethodScorecard>> ByTask(
    const std::vector<MethodScorecard>& cards) {
  std::map<std::string, std::vector<MethodScorecard>> out;
  for (const auto& c : cards) out[c.task_id].push_back(c);
  return out;
}

inline int CmdSweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto grid = GenerateWeightGrid(cfg.step);
  OutputSet outputs;
  for (const auto& [task, cards] : ByTask(ScorecardsForRun(cfg, err))) {
    std::vector<SweepStats> stats;
    for (const auto& c : cards) stats.push_back(Sweep(c, grid));
    std::sort(stats.begin(), stats.end(),
              [](const SweepStats& a, const SweepStats& b) { return a.method_id < b.method_id; });
    const TextTable table = ToTextTable(stats);
    outputs.Add(cfg.out / (task + "_sweep." + FormatExtension(cfg.format)),
                Render(table, cfg.format));
    out << Render(table, OutputFormat::kMarkdown);
  }
  outputs.Commit(err);
  return kExitOk;
}

inline int CmdReport(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.scorecards.empty())
    throw Error(ErrorKind::kUsage, "report needs scorecard documents", "scorecards");
  std::vector<MethodScorecard> all;
  for (const auto& p : cfg.scorecards) {
    auto cards = LoadScorecards(p);
    all.insert(all.end(), cards.begin(), cards.end());
  }
  const IQSWeights w = EffectiveWeights(cfg, nullptr);
  OutputSet outputs;
  for (const auto& [task, cards] : ByTask(all)) {
    const TextTable table = ToTextTable(RankMethods(cards, w));
    outputs.Add(cfg.out / RankingFileName(task, w, cfg.format), Render(table, cfg.format));
    out << Render(table, OutputFormat::kMarkdown) << "\n";
  }
  const auto averages = PerCriterionAverages(all);
  const TextTable avg_table = ToTextTable(averages);
  outputs.Add(cfg.out / ("per_criterion_averages." + FormatExtension(cfg.format)),
              Render(avg_table, cfg.format));
  out << Render(avg_table, OutputFormat::kMarkdown);
  outputs.Commit(err);
  return kExitOk;
}

inline int CmdFixture(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  SyntheticOptions opt;
  opt.seed = cfg.seed;
  opt.n_samples = cfg.n_samples;
  opt.n_methods = cfg.n_methods;
  opt.n_annotators = cfg.n_annotators;
  opt.noise = cfg.noise;
  opt.kind = cfg.fixture_kind;
  EvaluationBundle b = GenerateSyntheticBundle(opt);
  if (cfg.beta) b.config.simplicity.beta = *cfg.beta;
  if (cfg.policy) b.config.extraction_policy = *cfg.policy;
  if (cfg.weights) b.config.weights = *cfg.weights;
  CheckBundle(b);
  const fs::path dir = cfg.data_dir.value_or(cfg.out);
  SaveBundle(b, dir);
  out << "wrote fixture bundle to " << dir.string() << " (" << b.samples.size()
      << " samples, " << b.method_ids().size() << " methods, " << b.annotations.size()
      << " annotations)\n";
  return kExitOk;
}

inline int CmdServe(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  EvaluationBundle b = LoadForRun(cfg, false, &warnings);
  PrintWarnings(warnings, err);
  const BundlePaths paths = ResolveBundlePaths(cfg, true);
  ServiceConfig sc;
  sc.annotators_per_sample = b.config.annotators_per_sample;
  sc.lease_timeout = std::chrono::seconds(cfg.lease_timeout_secs);
  sc.annotation_file = paths.annotations.empty()
                           ? cfg.data_dir.value_or(".") / "annotations.jsonl"
                           : paths.annotations.front();
  AnnotationService service(std::move(b), sc);
  AnnotationServer server(service, cfg.static_dir);
  out << "serving on " << cfg.host << ":" << cfg.port << ", appending to "
      << sc.annotation_file.string() << std::endl;
  if (!server.Listen(cfg.host, cfg.port)) {
    err << "error: cannot listen on port " << cfg.port << "\n";
    return kExitError;
  }
  return kExitOk;
}

// Parses argv and runs one subcommand. Returns the process exit code.
inline int Run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Explanation quality scoring: plausibility, simplicity, reproducibility"};
  app.require_subcommand(1);

  std::string config_path, weights_text, policy_text, format_text, fixture_kind;
  std::optional<double> step, beta, noise;
  std::optional<std::string> out_dir, data_dir, static_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> port, lease_timeout, n_samples, n_methods, n_annotators;
  std::vector<std::string> scorecards;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run-config JSON document");
    sub->add_option("--data-dir", data_dir,
                    "Directory with task.json, samples.json, explanations.json, "
                    "annotations.jsonl");
    sub->add_option("--weights", weights_text, "Weights a1,a2,a3 summing to 1");
    sub->add_option("--beta", beta, "Simplicity beta");
    sub->add_option("--policy", policy_text, "Extraction policy mode:value");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--format", format_text, "tsv | json | markdown");
  };

  auto* validate = app.add_subcommand("validate", "Check a bundle and its annotation coverage");
  auto* compute = app.add_subcommand("compute", "Score every method and write a ranking");
  auto* sweep = app.add_subcommand("sweep", "IQS mean and std over the weight grid");
  auto* report = app.add_subcommand("report", "Rankings and per-criterion averages from scorecards");
  auto* serve = app.add_subcommand("serve", "Run the annotation collection service");
  auto* fixture = app.add_subcommand("fixture", "Write a seeded synthetic bundle");
  for (auto* sub : {validate, compute, sweep, report, serve, fixture}) common(sub);

  sweep->add_option("--step", step, "Grid step (1/k)");
  sweep->add_option("--scorecards", scorecards, "Scorecard documents instead of a bundle");
  report->add_option("scorecards", scorecards, "Scorecard documents")->required();
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--lease-timeout", lease_timeout, "Lease timeout in seconds");
  serve->add_option("--static-dir", static_dir, "Serve a web UI from this directory");
  fixture->add_option("--seed", seed, "RNG seed");
  fixture->add_option("--samples", n_samples, "Number of samples");
  fixture->add_option("--methods", n_methods, "Number of methods");
  fixture->add_option("--annotators", n_annotators, "Annotators per sample");
  fixture->add_option("--noise", noise, "Annotator noise in [0,1]");
  fixture->add_option("--kind", fixture_kind, "regression | binary_classification");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : LoadRunConfig(config_path);
    if (data_dir) cfg.data_dir = fs::path(*data_dir);
    if (!weights_text.empty()) cfg.weights = ParseWeights(weights_text);
    if (beta) cfg.beta = *beta;
    if (!policy_text.empty()) cfg.policy = ParseExtractionPolicy(policy_text);
    if (out_dir) cfg.out = *out_dir;
    if (!format_text.empty()) cfg.format = ParseOutputFormat(format_text);
    if (step) cfg.step = *step;
    if (!scorecards.empty()) cfg.scorecards.assign(scorecards.begin(), scorecards.end());
    if (seed) cfg.seed = *seed;
    if (port) cfg.port = *port;
    if (lease_timeout) cfg.lease_timeout_secs = *lease_timeout;
    if (static_dir) cfg.static_dir = fs::path(*static_dir);
    if (n_samples) cfg.n_samples = *n_samples;
    if (n_methods) cfg.n_methods = *n_methods;
    if (n_annotators) cfg.n_annotators = *n_annotators;
    if (noise) cfg.noise = *noise;
    if (!fixture_kind.empty()) {
      if (fixture_kind == "regression") {
        cfg.fixture_kind = TaskKind::kRegression;
      } else if (fixture_kind == "binary_classification") {
        cfg.fixture_kind = TaskKind::kBinaryClassification;
      } else {
        throw Error(ErrorKind::kUsage, "unknown fixture kind '" + fixture_kind + "'", "kind");
      }
    }

    if (*validate) return CmdValidate(cfg, out, err);
    if (*compute) return CmdCompute(cfg, out, err);
    if (*sweep) return CmdSweep(cfg, out, err);
    if (*report) return CmdReport(cfg, out, err);
    if (*serve) return CmdServe(cfg, out, err);
    if (*fixture) return CmdFixture(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kIncompleteCoverage ? kExitNotReady : kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace iqs::cli
