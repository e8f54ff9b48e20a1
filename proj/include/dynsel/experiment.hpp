#pragma once

#include <fstream>
#include <memory>
#include <string>

#include "dynsel/apply.hpp"
#include "dynsel/config.hpp"
#include "dynsel/core.hpp"
#include "dynsel/eval.hpp"
#include "dynsel/learners.hpp"

namespace dynsel {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct ExperimentOutcome {
  int status = kExitOk;
  std::string message;
  EvaluationReport report;
};

inline std::unique_ptr<StreamSource> make_stream(const ExperimentConfig& cfg) {
  if (cfg.stream == StreamKind::csv) return read_csv_stream(cfg.csv_path, cfg.label_column, cfg.header);
  return std::make_unique<SeaGenerator>(cfg.seed, cfg.drift, cfg.noise);
}

inline std::unique_ptr<StreamClassifier> make_method(const ExperimentConfig& cfg, std::size_t classes) {
  auto factory = make_learner_factory(cfg.learner, classes);
  switch (cfg.method) {
    case MethodKind::dynse:
      return std::make_unique<Dynse>(classes, factory,
                                     DynseParams{cfg.chunk_size, cfg.pool_size, cfg.window, cfg.k, cfg.dcs, cfg.pruning});
    case MethodKind::desdd:
      return std::make_unique<Desdd>(classes, factory,
                                     DesddParams{cfg.chunk_size, cfg.sub_ensembles, cfg.bag_size, cfg.lambda_min,
                                                 cfg.lambda_max, 0, derive_seed(cfg.seed, 1)});
    case MethodKind::mde:
      return std::make_unique<Mde>(classes, factory, MdeParams{cfg.chunk_size, cfg.pool_size, cfg.window, cfg.mde_k});
  }
  throw std::logic_error("unhandled method");
}

/// Metadata sidecar: resolved settings plus run facts, sorted by key.
inline Settings run_metadata(const ExperimentConfig& cfg, const EvaluationReport& report) {
  Settings meta = cfg.settings;
  meta["version"] = std::string(kVersion);
  meta["truncated"] = report.truncated ? "true" : "false";
  meta["instances_seen"] = std::to_string(report.instances_seen);
  meta["first_ready_index"] = report.first_ready_index ? std::to_string(*report.first_ready_index) : "none";
  return meta;
}

/// Runs the configured prequential experiment and writes `<out>` and `<out>.meta`.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  ExperimentOutcome outcome;
  std::unique_ptr<StreamSource> stream;
  try {
    stream = make_stream(cfg);
  } catch (const std::exception& e) {
    return {kExitRuntime, e.what(), {}};
  }
  auto model = make_method(cfg, stream->class_count());
  outcome.report = prequential_run(*stream, *model, cfg.n, cfg.eval);

  std::ofstream report_file(cfg.out, std::ios::binary | std::ios::trunc);
  if (!report_file) return {kExitRuntime, "cannot write report '" + cfg.out + "'", std::move(outcome.report)};
  write_report_csv(report_file, outcome.report);
  report_file.close();

  const std::string meta_path = cfg.out + ".meta";
  std::ofstream meta_file(meta_path, std::ios::binary | std::ios::trunc);
  if (!meta_file) return {kExitRuntime, "cannot write metadata '" + meta_path + "'", std::move(outcome.report)};
  meta_file << "# dynsel run metadata; rerun with --config " << meta_path << '\n';
  write_ini(meta_file, run_metadata(cfg, outcome.report));
  meta_file.close();
  if (!report_file || !meta_file) return {kExitRuntime, "I/O error while writing outputs", std::move(outcome.report)};
  if (outcome.report.truncated)
    outcome.message = "stream ended after " + std::to_string(outcome.report.instances_seen) + " instances";
  return outcome;
}

}  // namespace dynsel
