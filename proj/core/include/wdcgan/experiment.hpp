#pragma once

// End-to-end runs: data preparation, GAN training and generation, GAN
// evaluation bundles, the per-scenario classifier experiment, and report files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wdcgan/classifier.hpp"
#include "wdcgan/gan.hpp"
#include "wdcgan/gan_eval.hpp"
#include "wdcgan/metrics.hpp"
#include "wdcgan/signal.hpp"

namespace wdcgan::experiment {

struct EvalOptions {
  eval::Pairing pairing = eval::Pairing::one_to_one;
  std::size_t pdf_bins = 50;
  eval::SsimParams ssim;
};

struct RunConfig {
  // Inputs: either both record CSVs or the surrogate parameters.
  std::filesystem::path undamaged_record;
  std::filesystem::path damaged_record;
  double record_rate = signal::kDefaultRateHz;
  std::optional<signal::SurrogateParams> surrogate = signal::SurrogateParams{};
  std::filesystem::path run_dir = "run";

  std::size_t window_len = signal::kDefaultWindowLength;
  std::uint64_t master_seed = 0;

  gan::GanConfig gan;
  bool train_gan = true;
  // Used instead of training when set.
  std::filesystem::path generator_checkpoint;
  std::size_t synthetic_count = 256;

  classifier::ClassifierConfig classifier;  // shared settings; learning rate comes per scenario
  std::vector<double> scenario_learning_rates = {8e-4, 8e-4, 8e-4, 3.5e-3, 3.5e-3, 3.5e-3};
  std::vector<signal::ScenarioSpec> scenarios = signal::default_scenarios();

  EvalOptions eval;
  bool emit_plots = true;
  bool emit_reports = true;
  bool overwrite = false;

  void validate() const;
  classifier::ClassifierConfig classifier_for(const signal::ScenarioSpec& spec) const;
};

std::string to_json(const RunConfig& cfg, bool include_paths = true);
RunConfig run_config_from_json(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// FNV-1a of the path-free JSON snapshot.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex_hash(std::uint64_t h);

/// Stage seeds all derive from the master seed and a tag.
std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage);

struct ScenarioCounts {
  std::size_t train_undamaged_real = 0;
  std::size_t train_damaged_real = 0;
  std::size_t train_damaged_synthetic = 0;
  std::size_t test_undamaged_real = 0;
  std::size_t test_damaged_real = 0;
};

struct ReportEntry {
  std::size_t index = 0;  // position in the shared test set
  double score = 0.0;
  int label = 0;
};

struct ScenarioReport {
  int scenario_id = 0;
  ScenarioCounts counts;
  double mae = 0.0;
  double classification_accuracy = 0.0;
  double average_precision = 0.0;
  double threshold = 0.5;
  std::vector<ReportEntry> entries;
  std::uint64_t seed = 0;
  std::string config_hash;

  metrics::PredictionSet predictions() const;
};

std::string to_json(const ScenarioReport& report);
ScenarioReport scenario_report_from_json(std::string_view text);
void save_scenario_report(const std::filesystem::path& path, const ScenarioReport& report);
ScenarioReport load_scenario_report(const std::filesystem::path& path);

/// Normalized windows of both classes. `gan_pool` holds the damaged windows
/// that never enter the shared test set.
struct DataPools {
  std::vector<signal::Window> undamaged;
  std::vector<signal::Window> damaged;
  std::vector<signal::Window> gan_pool;
};

using Logger = std::function<void(const std::string&)>;

/// Creates the run directory, or clears it when cfg.overwrite is set.
void prepare_run_dir(const RunConfig& cfg);

/// Loads or synthesizes the two records, segments and normalizes them.
DataPools prepare_data(const RunConfig& cfg);

/// Trains the generator on the GAN pool and writes checkpoints and the log.
nn::Network train_gan_stage(const RunConfig& cfg, const DataPools& pools, const Logger& log = {});

std::vector<signal::Window> generate_stage(const RunConfig& cfg, nn::Network& generator);

ScenarioReport run_scenario(const RunConfig& cfg, const DataPools& pools, std::span<const signal::Window> synthetic,
                            const signal::ScenarioSpec& spec, const Logger& log = {});

/// Full pipeline: data, GAN (or checkpoint), synthetic pool, and every scenario.
std::vector<ScenarioReport> run_scenarios(const RunConfig& cfg, const Logger& log = {});

struct EvalBundle {
  std::vector<eval::FidPair> fid;
  eval::DensityCurve fid_pdf;
  eval::CreativityResult creativity;
  std::vector<double> diversity;
  eval::DensityCurve diversity_pdf;
  // Generated and real windows of the lowest- and highest-FID pairs.
  std::vector<std::pair<std::string, eval::BoxStats>> boxplots;
};

EvalBundle evaluate_generated(std::span<const signal::Window> generated, std::span<const signal::Window> real,
                              const EvalOptions& options, std::uint64_t seed);
void write_eval_bundle(const std::filesystem::path& dir, const EvalBundle& bundle);

/// Loads a generator, generates as many windows as there are real ones, and
/// evaluates them; files go to out_dir when it is non-empty.
EvalBundle eval_gan(const std::filesystem::path& generator_checkpoint, std::span<const signal::Window> real,
                    const std::filesystem::path& out_dir, const EvalOptions& options, std::uint64_t seed);

struct SummaryRow {
  int scenario_id = 0;
  double mae = 0.0;
  double classification_accuracy = 0.0;
  double average_precision = 0.0;
  // Differences from scenario 0; empty when no scenario-0 report exists.
  std::optional<double> delta_mae;
  std::optional<double> delta_ca;
  std::optional<double> delta_ap;
};

/// Reads reports/scenario_*.json and writes reports/summary.csv (deltas are
/// against scenario 0 and left empty when it is absent).
std::vector<SummaryRow> report(const std::filesystem::path& run_dir);

}  // namespace wdcgan::experiment
