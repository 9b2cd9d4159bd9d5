#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "triform/table.hpp"

namespace triform::report {

struct ModelInput {
  std::string model_id;
  std::string params;               // display only, e.g. "1.6B"
  std::filesystem::path activations;  // activation_store base path
  std::optional<std::filesystem::path> interventions;  // InterventionRecord JSONL
  std::optional<std::filesystem::path> plan;           // PatchPlan JSON, for coverage
};

struct StageToggles {
  bool rsa = true;
  bool probe = true;
  bool entropy = true;
  bool cka = true;
  bool fars = true;
  bool sweep = true;
  bool holdout = true;
  bool patching = true;
  bool alignment = true;
};

struct PipelineConfig {
  std::optional<std::filesystem::path> stimulus_file;
  std::vector<ModelInput> models;
  StageToggles stages;
  int n_perm = 1000;
  double alpha = 0.05;
  double ridge_alpha = 0.1;
  int k = 10;
  int bootstrap_resamples = 5000;
  int random_draws = 10;
  double agnostic_percentile = 90.0;
  std::vector<int> sweep_ks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17};
  std::vector<int> holdout_ks = {3, 6, 9};
  int holdout_splits = 10;
  std::uint64_t seed = 0;
  bool structured_is_formal = true;
  // Stage outputs are cached here when set, keyed by input and config digests.
  std::optional<std::filesystem::path> cache_dir;
  // Rethrow the first stage error instead of recording it.
  bool fail_fast = false;
};

// Relative paths in the file are resolved against base_dir.
PipelineConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const PipelineConfig& config);

struct StageStatus {
  std::string stage;
  std::string model_id;
  std::string status;  // ok, skipped, error
  std::string reason;
};

struct ReportBundle {
  std::vector<Table> tables;
  std::vector<StageStatus> stages;
  nlohmann::ordered_json provenance;
  int cache_hits = 0;  // not serialized

  const Table* find(const std::string& name) const;
  bool ok() const;
};

// Stages run in dependency order per model; a failing stage marks its
// dependents skipped and the remaining stages continue.
ReportBundle run_pipeline(const PipelineConfig& config);

std::string bundle_to_json(const ReportBundle& bundle);

// Tables, stage_status and provenance.json under dir.
std::vector<std::filesystem::path> write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir,
                                                Format format);

inline constexpr std::string_view kToolVersion = "triform 1.0.0";

}  // namespace triform::report
