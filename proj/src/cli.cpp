#include "mfl/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mfl/datagen.hpp"
#include "mfl/ensemble.hpp"
#include "mfl/errors.hpp"
#include "mfl/experiments.hpp"
#include "mfl/io.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

void note_artifact(const std::filesystem::path& path, const std::string& what) {
  std::cout << "wrote " << path.string() << " (" << what << ")\n";
}

void write_records(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  emit_csv(records, path);
  note_artifact(path, std::to_string(records.size()) + " records");
}

void cmd_gen_data(const ExperimentConfig& cfg) {
  const Dataset full = make_task_dataset(cfg);
  const auto [train_set, test_set] =
      split_dataset(full, cfg.task.train_frac, rng::derive_seed(cfg.master_seed, "split"));
  const std::string stem = to_string(cfg.task.kind);
  const std::filesystem::path dir = cfg.output_dir;

  dataset_write(full, dir / (stem + "_full.csv"));
  note_artifact(dir / (stem + "_full.csv"), std::to_string(full.size()) + " rows");
  dataset_write(train_set, dir / (stem + "_train.csv"));
  note_artifact(dir / (stem + "_train.csv"), std::to_string(train_set.size()) + " rows");
  dataset_write(test_set, dir / (stem + "_test.csv"));
  note_artifact(dir / (stem + "_test.csv"), std::to_string(test_set.size()) + " rows");
  write_manifest(cfg, dir);
  note_artifact(dir / "manifest.json", "resolved config");
}

void cmd_train(const ExperimentConfig& cfg) {
  const std::string warning = cfg.train.validate();
  if (!warning.empty()) std::cerr << "warning: " << warning << "\n";

  const auto [train_set, test_set] = make_task_split(cfg);
  TrainConfig c = cfg.train;
  c.seed = rng::derive_seed(cfg.master_seed, "train");
  ParticleSystem s =
      init_system(cfg.network_size, train_set.input_dim(), cfg.output_bound, c);
  const TrainResult result = train(s, train_set, c, &test_set, cfg.threads, true);

  const std::filesystem::path dir = cfg.output_dir;
  checkpoint_write(result.system, dir / "checkpoint.csv");
  note_artifact(dir / "checkpoint.csv",
                std::to_string(result.system.size()) + " particles");
  write_records(result.trajectory, dir / "trajectory.csv");
  write_manifest(cfg, dir);
  note_artifact(dir / "manifest.json", "resolved config");
}

void cmd_merge(const std::vector<std::string>& inputs, const ExperimentConfig& cfg) {
  std::vector<ParticleSystem> systems;
  systems.reserve(inputs.size());
  for (const std::string& path : inputs) {
    if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path);
    systems.push_back(checkpoint_read(path));
  }
  const ParticleSystem merged = merge_systems(systems);
  const std::filesystem::path out = cfg.output_dir / "merged.csv";
  checkpoint_write(merged, out);
  note_artifact(out, std::to_string(merged.size()) + " particles from " +
                         std::to_string(systems.size()) + " checkpoints");
}

void cmd_prune(const std::string& input, std::size_t keep, const ExperimentConfig& cfg) {
  if (!std::filesystem::exists(input)) throw ConfigError("checkpoint not found: " + input);
  const ParticleSystem s = checkpoint_read(input);
  if (keep == 0 || keep > s.size())
    throw ConfigError("--keep must lie in [1, " + std::to_string(s.size()) + "], got " +
                      std::to_string(keep));
  const ParticleSystem pruned = prune_random(s, keep, cfg.master_seed);
  const std::filesystem::path out = cfg.output_dir / "pruned.csv";
  checkpoint_write(pruned, out);
  note_artifact(out, std::to_string(pruned.size()) + " of " + std::to_string(s.size()) +
                         " particles kept");
}

void cmd_heatmap(const ExperimentConfig& cfg) {
  const std::vector<MetricRecord> records = run_merge_heatmap(cfg);
  write_records(records, cfg.output_dir / "heatmap.csv");
  emit_heatmap_svg(records, cfg.output_dir / "heatmap.svg");
  note_artifact(cfg.output_dir / "heatmap.svg",
                std::to_string(cfg.n_list.size() * cfg.merge_sizes().size()) + " cells");
  write_manifest(cfg, cfg.output_dir);
  note_artifact(cfg.output_dir / "manifest.json", "resolved config");
}

void cmd_records_run(const ExperimentConfig& cfg, const std::string& csv_name,
                     std::vector<MetricRecord> (*run)(const ExperimentConfig&)) {
  const std::vector<MetricRecord> records = run(cfg);
  write_records(records, cfg.output_dir / csv_name);
  write_manifest(cfg, cfg.output_dir);
  note_artifact(cfg.output_dir / "manifest.json", "resolved config");
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"mean-field Langevin networks: train, merge, prune, diagnose"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config file");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "override the master seed");
  CLI::Option* out_opt = app.add_option("--out", out_dir, "override the output directory");
  CLI::Option* threads_opt = app.add_option("--threads", threads, "override the thread count");

  std::vector<std::string> merge_inputs;
  std::string prune_input;
  std::size_t prune_keep = 0;

  CLI::App* c_gen = app.add_subcommand("gen-data", "generate a dataset and its split");
  CLI::App* c_train = app.add_subcommand("train", "train one network, write a checkpoint");
  CLI::App* c_merge = app.add_subcommand("merge", "concatenate checkpoints into one network");
  c_merge->add_option("inputs", merge_inputs, "checkpoint CSV files")->required()->expected(-1);
  CLI::App* c_prune = app.add_subcommand("prune", "keep a random particle subset");
  c_prune->add_option("--in", prune_input, "checkpoint CSV file")->required();
  c_prune->add_option("--keep", prune_keep, "particles to keep")->required();
  CLI::App* c_heatmap = app.add_subcommand("heatmap", "merged-network error grid over (N, M)");
  CLI::App* c_sweep = app.add_subcommand("lambda-sweep", "temperature sweep with merging");
  CLI::App* c_stationary =
      app.add_subcommand("stationary", "noise calibration against the stationary law");
  CLI::App* c_lora = app.add_subcommand("lora", "low-rank adapter training and merging");
  for (CLI::App* sub : {c_gen, c_train, c_merge, c_prune, c_heatmap, c_sweep, c_stationary, c_lora})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto make_config = [&](std::optional<ExperimentKind> kind) {
      ExperimentConfig cfg;
      if (!config_path.empty()) cfg = ExperimentConfig::load(config_path);
      if (kind) {
        if (cfg.experiment_explicit && cfg.experiment != *kind)
          throw ConfigError("config names experiment '" + to_string(cfg.experiment) +
                            "' but this subcommand runs '" + to_string(*kind) + "'");
        cfg.experiment = *kind;
        cfg.experiment_explicit = true;
      }
      if (seed_opt->count()) cfg.master_seed = seed;
      if (out_opt->count()) cfg.output_dir = out_dir;
      if (threads_opt->count()) cfg.threads = threads;
      cfg.validate();
      return cfg;
    };

    if (c_gen->parsed()) {
      cmd_gen_data(make_config(std::nullopt));
    } else if (c_train->parsed()) {
      cmd_train(make_config(std::nullopt));
    } else if (c_merge->parsed()) {
      cmd_merge(merge_inputs, make_config(std::nullopt));
    } else if (c_prune->parsed()) {
      cmd_prune(prune_input, prune_keep, make_config(std::nullopt));
    } else if (c_heatmap->parsed()) {
      cmd_heatmap(make_config(ExperimentKind::MergeHeatmap));
    } else if (c_sweep->parsed()) {
      cmd_records_run(make_config(ExperimentKind::LambdaSweep), "lambda_sweep.csv",
                      run_lambda_sweep);
    } else if (c_stationary->parsed()) {
      cmd_records_run(make_config(ExperimentKind::StationaryCheck), "stationary.csv",
                      run_stationary_check);
    } else if (c_lora->parsed()) {
      cmd_records_run(make_config(ExperimentKind::LoraMerge), "lora.csv", run_lora_merge);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mfl
