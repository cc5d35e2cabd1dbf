#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "starwatch/campaigns.hpp"
#include "starwatch/lockstep.hpp"
#include "starwatch/synth.hpp"

namespace starwatch::pipeline {

struct MeasureConfig {
  int kmeans_k_min = 2;
  int kmeans_k_max = 8;
  int kmeans_restarts = 8;
  std::uint64_t kmeans_seed = 1;
  int vector_classes = 8;  // 8 or 5
  std::int64_t popular_min_stars = 50;
};

struct RegressConfig {
  int order = 2;
  bool log_transform = true;
};

struct EnrichConfig {
  std::string provider = "fixture";  // "fixture" or "live"
  std::string repo_existence_fixture;
  std::string account_existence_fixture;
  std::string repo_baseline;     // CSV of baseline repo ids
  std::string account_baseline;  // CSV of baseline account ids
  std::string trending_table;
  std::string package_table;
  std::string token_env = "GITHUB_TOKEN";
};

// Everything a run needs; defaults are the detection parameters the tool was
// tuned with (n=50, m=10, 30-day windows, rho=0.5, the 50-star filters and
// the >50/>50%/>10% campaign thresholds).
struct PipelineConfig {
  TimeWindow window;
  std::vector<std::string> inputs;  // event files for `ingest`
  int threads = 0;                  // 0: library default
  lockstep::LockstepParams lockstep;
  bool lockstep_chunking = true;
  std::int64_t low_activity_min_fake = 50;
  campaigns::CampaignThresholds campaign;
  MeasureConfig measure;
  RegressConfig regress;
  synth::ScenarioConfig scenario;
  EnrichConfig enrich;

  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static PipelineConfig load(const std::filesystem::path& path);
};

// Subcommand bodies; each validates its inputs up front, then writes
// deterministic artifacts into `out`. Errors are thrown, not half-written.
void run_ingest(const PipelineConfig& cfg, const std::filesystem::path& out);
void run_synth(const PipelineConfig& cfg, const std::filesystem::path& out);
void run_detect(const PipelineConfig& cfg, const std::filesystem::path& out);
void run_campaigns(const PipelineConfig& cfg, const std::filesystem::path& out);
void run_evaluate(const PipelineConfig& cfg, const std::filesystem::path& out);
void run_measure(const PipelineConfig& cfg, const std::filesystem::path& out, bool plot_data);
void run_regress(const PipelineConfig& cfg, const std::filesystem::path& out);
void run_enrich(const PipelineConfig& cfg, const std::filesystem::path& out);
void run_report(const PipelineConfig& cfg, const std::filesystem::path& out, bool plot_data);

// Dispatches one subcommand by name; returns the process exit code and prints
// a diagnostic to stderr on failure.
int run_command(const std::string& name, const PipelineConfig& cfg,
                const std::filesystem::path& out, bool plot_data);

}  // namespace starwatch::pipeline
