#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mfl/data.hpp"
#include "mfl/datagen.hpp"
#include "mfl/optim.hpp"
#include "mfl/records.hpp"

namespace mfl {

enum class ExperimentKind { MergeHeatmap, LambdaSweep, StationaryCheck, LoraMerge };
std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct TaskConfig {
  TaskKind kind = TaskKind::Circles;
  CirclesParams circles;
  MultiIndexParams multi_index;
  double train_frac = 0.8;
  // Dataset seed; 0 means derive one from the master seed.
  std::uint64_t seed = 0;
};

// Langevin-free diagnostics of the injected noise (data term switched off).
struct StationaryConfig {
  std::size_t particles = 1000;
  std::size_t input_dim = 2;
  std::size_t steps = 20000;
  std::size_t record_every = 2000;
};

// Low-rank adapter experiment: task generation plus fine-tuning knobs.
struct LoraRunConfig {
  std::size_t k = 8;
  std::size_t d = 32;
  std::size_t target_rank = 2;
  std::size_t n = 256;
  std::size_t n_test = 1024;
  double noise_std = 0.1;
  std::size_t rank = 32;
  std::size_t members = 8;
  double eta = 0.01;
  double lambda = 1e-5;
  double l2_coeff = 1e-4;
  double weight_decay = 0.0;
  std::size_t epochs = 300;
  double init_std = 1.0;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::MergeHeatmap;
  // True when the loaded JSON named the experiment itself.
  bool experiment_explicit = false;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  int threads = 1;
  double output_bound = 10.0;      // R
  std::size_t network_size = 200;  // width used by the plain train subcommand
  std::size_t n_infinity = 10000;  // reference network width
  std::vector<std::size_t> n_list{50,  100, 150, 200, 250,
                                  300, 350, 400, 450, 500};  // member widths
  std::vector<std::size_t> m_list;  // merge sizes; empty means 1..m_max
  std::size_t m_max = 20;           // trained pool size per width
  std::size_t subsample_repeats = 50;
  std::vector<double> lambda_list{1e-1, 1e-2, 1e-3, 1e-4};
  TaskConfig task;
  TrainConfig train;  // train.seed is ignored; member seeds derive from master_seed
  StationaryConfig stationary;
  LoraRunConfig lora;

  std::vector<std::size_t> merge_sizes() const;

  void validate() const;
  nlohmann::json to_json() const;
  // Strict: an unknown key anywhere is a ConfigError naming the key.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

// Full dataset for the configured task; uses task.seed when nonzero, else a
// seed derived from (master_seed, "data").
Dataset make_task_dataset(const ExperimentConfig& cfg);
std::pair<Dataset, Dataset> make_task_split(const ExperimentConfig& cfg);

std::vector<MetricRecord> run_merge_heatmap(const ExperimentConfig& cfg);
std::vector<MetricRecord> run_lambda_sweep(const ExperimentConfig& cfg);
std::vector<MetricRecord> run_stationary_check(const ExperimentConfig& cfg);
std::vector<MetricRecord> run_lora_merge(const ExperimentConfig& cfg);

// Grid of mean sup-norm cells (N on x, M on y) colored on a log scale between
// two fixed color stops spanning the data range, value annotated per cell.
// Standalone SVG with no external references.
void emit_heatmap_svg(const std::vector<MetricRecord>& records,
                      const std::filesystem::path& path);

// Fully resolved config as <dir>/manifest.json; rerunning from it reproduces
// every CSV byte for byte on the same platform.
void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace mfl
