#pragma once

#include "malcraft/crafting.hpp"
#include "malcraft/defenses.hpp"
#include "malcraft/feature_space.hpp"
#include "malcraft/metrics.hpp"
#include "malcraft/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace malcraft {

// ---------------------------------------------------------------------------
// Experiment configuration (versioned JSON; unknown keys are hard errors so
// sweep typos cannot silently no-op)
// ---------------------------------------------------------------------------

struct DataSource {
  enum class Kind { synthetic, drebin, files };
  Kind kind = Kind::synthetic;
  SyntheticConfig synthetic;
  std::filesystem::path feature_dir;     // drebin
  std::filesystem::path label_manifest;  // drebin
  std::filesystem::path vocab_file;      // files
  std::filesystem::path samples_file;    // files
};

struct DefensePlan {
  std::vector<Restriction> restrictions;
  std::vector<FeatureIndex> mi_n;
  std::vector<MIDirection> mi_directions;
  std::vector<double> distill_temperatures;
  std::vector<int> retrain_n_adv;
  int retrain_extra_epochs = 1;
};

struct ExperimentConfig {
  DataSource data;
  double test_fraction = 0.33;
  std::uint64_t split_seed = 1;
  std::vector<std::vector<FeatureIndex>> architectures;
  std::vector<double> malware_ratios;
  TrainConfig train;
  int crafting_k = 20;
  DefensePlan defenses;
  bool timing_in_csv = false;  // keeps default reports byte-reproducible
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Report rows
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string arch;           // e.g. "200x200"
  double ratio = 0.0;
  std::string defense;        // "baseline", "manifestonly", "mi_top", ...
  std::string defense_param;  // r / n / T / n_adv, empty for baseline
  ClassifierMetrics classifier;
  CraftingMetrics crafting;
  std::uint64_t seed = 0;
  double wallclock_s = 0.0;

  std::string key() const;  // identity: arch|ratio|defense|param
};

std::string arch_string(const std::vector<FeatureIndex>& hidden);
std::string csv_header();
std::string csv_row(const ReportRow& row, bool timing_in_csv);

struct RunOptions {
  std::filesystem::path output_dir;
  bool resume = false;
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;  // replaces the training seed
};

// Full sweep: for every grid point train a baseline, evaluate, craft, apply
// each configured defense, re-evaluate and re-craft. Rows are flushed to
// report.csv / report.jsonl after each configuration; with `resume` set,
// rows already present in report.csv are skipped. A row that fails is
// recorded in the JSONL log and the sweep continues.
std::vector<ReportRow> run_experiment(const ExperimentConfig& config, const RunOptions& options);

// Renders report.csv as an aligned table and checks that every defense row
// has a baseline row and that the recorded baseline deltas in report.jsonl
// reproduce exactly.
int verify_and_render_report(const std::filesystem::path& output_dir, std::ostream& out);

}  // namespace malcraft
