#include "mfl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include "mfl/ensemble.hpp"
#include "mfl/errors.hpp"
#include "mfl/io.hpp"
#include "mfl/lora.hpp"
#include "mfl/parallel.hpp"
#include "mfl/rng.hpp"

namespace mfl {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::MergeHeatmap: return "merge_heatmap";
    case ExperimentKind::LambdaSweep: return "lambda_sweep";
    case ExperimentKind::StationaryCheck: return "stationary_check";
    case ExperimentKind::LoraMerge: return "lora_merge";
  }
  throw std::invalid_argument("unknown ExperimentKind");
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "merge_heatmap") return ExperimentKind::MergeHeatmap;
  if (s == "lambda_sweep") return ExperimentKind::LambdaSweep;
  if (s == "stationary_check") return ExperimentKind::StationaryCheck;
  if (s == "lora_merge") return ExperimentKind::LoraMerge;
  throw ConfigError("unknown experiment: " + s);
}

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(ctx + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw ConfigError("unknown config key '" + item.key() + "' in " + ctx);
  }
}

std::int64_t as_int(const json& v, const std::string& ctx) {
  if (!v.is_number_integer())
    throw ConfigError(ctx + " must be an integer, got " + v.dump());
  return v.get<std::int64_t>();
}

void read_size(const json& j, const char* key, std::size_t& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  const std::int64_t v = as_int(j.at(key), ctx + "." + key);
  if (v < 0) throw ConfigError(ctx + "." + key + " must be non-negative, got " + std::to_string(v));
  out = static_cast<std::size_t>(v);
}

void read_u64(const json& j, const char* key, std::uint64_t& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
    return;
  }
  const std::int64_t s = as_int(v, ctx + "." + key);
  if (s < 0) throw ConfigError(ctx + "." + key + " must be non-negative");
  out = static_cast<std::uint64_t>(s);
}

void read_int(const json& j, const char* key, int& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  out = static_cast<int>(as_int(j.at(key), ctx + "." + key));
}

void read_double(const json& j, const char* key, double& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(ctx + "." + key + " must be a number, got " + v.dump());
  out = v.get<double>();
}

void read_string(const json& j, const char* key, std::string& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(ctx + "." + key + " must be a string, got " + v.dump());
  out = v.get<std::string>();
}

void read_size_list(const json& j, const char* key, std::vector<std::size_t>& out,
                    const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(ctx + "." + key + " must be an array");
  out.clear();
  for (const json& e : v) {
    const std::int64_t x = as_int(e, ctx + "." + key + " entry");
    if (x < 0) throw ConfigError(ctx + "." + key + " entries must be non-negative");
    out.push_back(static_cast<std::size_t>(x));
  }
}

void read_double_list(const json& j, const char* key, std::vector<double>& out,
                      const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(ctx + "." + key + " must be an array");
  out.clear();
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(ctx + "." + key + " entries must be numbers");
    out.push_back(e.get<double>());
  }
}

void print_warning(const TrainConfig& cfg) {
  const std::string w = cfg.validate();
  if (!w.empty()) std::cerr << "warning: " << w << "\n";
}

double coordinate_variance(const ParticleSystem& s) {
  std::size_t count = 0;
  double mean = 0.0;
  for (const Particle& p : s.particles)
    for (double v : p.coords) {
      ++count;
      mean += v;
    }
  mean /= static_cast<double>(count);
  double ss = 0.0;
  for (const Particle& p : s.particles)
    for (double v : p.coords) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(count - 1);
}

double safe_log(double v) {
  return std::log(std::max(v, std::numeric_limits<double>::denorm_min()));
}

}  // namespace

std::vector<std::size_t> ExperimentConfig::merge_sizes() const {
  if (!m_list.empty()) return m_list;
  std::vector<std::size_t> sizes(m_max);
  for (std::size_t i = 0; i < m_max; ++i) sizes[i] = i + 1;
  return sizes;
}

void ExperimentConfig::validate() const {
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(output_bound > 0.0)) throw ConfigError("output_bound must be positive");
  if (network_size == 0) throw ConfigError("network_size must be positive");
  if (n_list.empty()) throw ConfigError("n_list must not be empty");
  for (std::size_t n : n_list)
    if (n == 0) throw ConfigError("n_list entries must be positive");
  if (n_infinity < *std::max_element(n_list.begin(), n_list.end()))
    throw ConfigError("n_infinity (" + std::to_string(n_infinity) +
                      ") must be >= max of n_list");
  if (m_max == 0) throw ConfigError("m_max must be positive");
  for (std::size_t m : m_list)
    if (m == 0 || m > m_max)
      throw ConfigError("m_list entries must lie in [1, m_max]; got " + std::to_string(m) +
                        " with m_max " + std::to_string(m_max));
  if (subsample_repeats == 0) throw ConfigError("subsample_repeats must be positive");
  if (lambda_list.empty()) throw ConfigError("lambda_list must not be empty");
  for (double l : lambda_list)
    if (l < 0.0) throw ConfigError("lambda_list entries must be >= 0");
  if (!(task.train_frac > 0.0) || !(task.train_frac < 1.0))
    throw ConfigError("task.train_frac must lie strictly between 0 and 1");
  if (stationary.particles == 0 || stationary.input_dim == 0 || stationary.steps == 0 ||
      stationary.record_every == 0)
    throw ConfigError("stationary parameters must be positive");
  if (stationary.record_every > stationary.steps)
    throw ConfigError("stationary.record_every exceeds stationary.steps");
  if (lora.k == 0 || lora.d == 0 || lora.n == 0 || lora.n_test == 0 || lora.rank == 0 ||
      lora.members == 0 || lora.epochs == 0)
    throw ConfigError("lora parameters must be positive");
  if (lora.target_rank == 0 || lora.target_rank > std::min(lora.k, lora.d))
    throw ConfigError("lora.target_rank out of range");
  if (lora.noise_std < 0.0 || lora.lambda < 0.0 || lora.l2_coeff < 0.0 ||
      lora.weight_decay < 0.0 || lora.init_std < 0.0 || !(lora.eta > 0.0))
    throw ConfigError("lora rates must be non-negative (eta positive)");
}

nlohmann::json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = to_string(experiment);
  j["master_seed"] = master_seed;
  j["output_dir"] = output_dir.string();
  j["threads"] = threads;
  j["output_bound"] = output_bound;
  j["network_size"] = network_size;
  j["n_infinity"] = n_infinity;
  j["n_list"] = n_list;
  j["m_list"] = merge_sizes();
  j["m_max"] = m_max;
  j["subsample_repeats"] = subsample_repeats;
  j["lambda_list"] = lambda_list;

  json t;
  t["kind"] = to_string(task.kind);
  t["train_frac"] = task.train_frac;
  t["seed"] = task.seed;
  if (task.kind == TaskKind::Circles) {
    t["n"] = task.circles.n;
    t["r_inner"] = task.circles.r_inner;
    t["r_outer"] = task.circles.r_outer;
    t["noise_std"] = task.circles.noise_std;
  } else {
    t["n"] = task.multi_index.n;
    t["d"] = task.multi_index.d;
    t["k"] = task.multi_index.k;
    t["r"] = task.multi_index.r;
    t["r_bar"] = task.multi_index.r_bar;
  }
  j["task"] = t;

  json tr;
  tr["eta"] = train.eta;
  tr["lambda"] = train.lambda;
  tr["l2_coeff"] = train.l2_coeff;
  tr["epochs"] = train.epochs;
  tr["loss"] = to_string(train.loss);
  tr["init_std"] = train.init_std;
  j["train"] = tr;

  json st;
  st["particles"] = stationary.particles;
  st["input_dim"] = stationary.input_dim;
  st["steps"] = stationary.steps;
  st["record_every"] = stationary.record_every;
  j["stationary"] = st;

  json lo;
  lo["k"] = lora.k;
  lo["d"] = lora.d;
  lo["target_rank"] = lora.target_rank;
  lo["n"] = lora.n;
  lo["n_test"] = lora.n_test;
  lo["noise_std"] = lora.noise_std;
  lo["rank"] = lora.rank;
  lo["members"] = lora.members;
  lo["eta"] = lora.eta;
  lo["lambda"] = lora.lambda;
  lo["l2_coeff"] = lora.l2_coeff;
  lo["weight_decay"] = lora.weight_decay;
  lo["epochs"] = lora.epochs;
  lo["init_std"] = lora.init_std;
  j["lora"] = lo;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"experiment", "master_seed", "output_dir", "threads", "output_bound",
              "network_size", "n_infinity", "n_list", "m_list", "m_max", "subsample_repeats",
              "lambda_list", "task", "train", "stationary", "lora"});
  ExperimentConfig cfg;
  if (j.contains("experiment")) {
    std::string kind;
    read_string(j, "experiment", kind, "config");
    cfg.experiment = experiment_kind_from_string(kind);
    cfg.experiment_explicit = true;
  }
  read_u64(j, "master_seed", cfg.master_seed, "config");
  std::string out_dir = cfg.output_dir.string();
  read_string(j, "output_dir", out_dir, "config");
  cfg.output_dir = out_dir;
  read_int(j, "threads", cfg.threads, "config");
  read_double(j, "output_bound", cfg.output_bound, "config");
  read_size(j, "network_size", cfg.network_size, "config");
  read_size(j, "n_infinity", cfg.n_infinity, "config");
  read_size_list(j, "n_list", cfg.n_list, "config");
  read_size_list(j, "m_list", cfg.m_list, "config");
  read_size(j, "m_max", cfg.m_max, "config");
  read_size(j, "subsample_repeats", cfg.subsample_repeats, "config");
  read_double_list(j, "lambda_list", cfg.lambda_list, "config");

  if (j.contains("task")) {
    const json& t = j.at("task");
    check_keys(t, "task",
               {"kind", "train_frac", "seed", "n", "r_inner", "r_outer", "noise_std", "d", "k",
                "r", "r_bar"});
    if (t.contains("kind")) {
      std::string kind;
      read_string(t, "kind", kind, "task");
      try {
        cfg.task.kind = task_kind_from_string(kind);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    read_double(t, "train_frac", cfg.task.train_frac, "task");
    read_u64(t, "seed", cfg.task.seed, "task");
    std::size_t n = 0;
    if (t.contains("n")) {
      read_size(t, "n", n, "task");
      cfg.task.circles.n = n;
      cfg.task.multi_index.n = n;
    }
    read_double(t, "r_inner", cfg.task.circles.r_inner, "task");
    read_double(t, "r_outer", cfg.task.circles.r_outer, "task");
    read_double(t, "noise_std", cfg.task.circles.noise_std, "task");
    read_size(t, "d", cfg.task.multi_index.d, "task");
    read_size(t, "k", cfg.task.multi_index.k, "task");
    read_double(t, "r", cfg.task.multi_index.r, "task");
    read_double(t, "r_bar", cfg.task.multi_index.r_bar, "task");
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train", {"eta", "lambda", "l2_coeff", "epochs", "loss", "init_std"});
    read_double(t, "eta", cfg.train.eta, "train");
    read_double(t, "lambda", cfg.train.lambda, "train");
    read_double(t, "l2_coeff", cfg.train.l2_coeff, "train");
    read_size(t, "epochs", cfg.train.epochs, "train");
    if (t.contains("loss")) {
      std::string loss;
      read_string(t, "loss", loss, "train");
      try {
        cfg.train.loss = loss_kind_from_string(loss);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    read_double(t, "init_std", cfg.train.init_std, "train");
  }

  if (j.contains("stationary")) {
    const json& t = j.at("stationary");
    check_keys(t, "stationary", {"particles", "input_dim", "steps", "record_every"});
    read_size(t, "particles", cfg.stationary.particles, "stationary");
    read_size(t, "input_dim", cfg.stationary.input_dim, "stationary");
    read_size(t, "steps", cfg.stationary.steps, "stationary");
    read_size(t, "record_every", cfg.stationary.record_every, "stationary");
  }

  if (j.contains("lora")) {
    const json& t = j.at("lora");
    check_keys(t, "lora",
               {"k", "d", "target_rank", "n", "n_test", "noise_std", "rank", "members", "eta",
                "lambda", "l2_coeff", "weight_decay", "epochs", "init_std"});
    read_size(t, "k", cfg.lora.k, "lora");
    read_size(t, "d", cfg.lora.d, "lora");
    read_size(t, "target_rank", cfg.lora.target_rank, "lora");
    read_size(t, "n", cfg.lora.n, "lora");
    read_size(t, "n_test", cfg.lora.n_test, "lora");
    read_double(t, "noise_std", cfg.lora.noise_std, "lora");
    read_size(t, "rank", cfg.lora.rank, "lora");
    read_size(t, "members", cfg.lora.members, "lora");
    read_double(t, "eta", cfg.lora.eta, "lora");
    read_double(t, "lambda", cfg.lora.lambda, "lora");
    read_double(t, "l2_coeff", cfg.lora.l2_coeff, "lora");
    read_double(t, "weight_decay", cfg.lora.weight_decay, "lora");
    read_size(t, "epochs", cfg.lora.epochs, "lora");
    read_double(t, "init_std", cfg.lora.init_std, "lora");
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

Dataset make_task_dataset(const ExperimentConfig& cfg) {
  const std::uint64_t seed =
      cfg.task.seed != 0 ? cfg.task.seed : rng::derive_seed(cfg.master_seed, "data");
  switch (cfg.task.kind) {
    case TaskKind::Circles: {
      CirclesParams p = cfg.task.circles;
      p.seed = seed;
      return gen_circles(p);
    }
    case TaskKind::MultiIndex: {
      MultiIndexParams p = cfg.task.multi_index;
      p.seed = seed;
      return gen_multi_index(p);
    }
    default:
      throw ConfigError("task kind '" + to_string(cfg.task.kind) +
                        "' does not generate a dataset here");
  }
}

std::pair<Dataset, Dataset> make_task_split(const ExperimentConfig& cfg) {
  return split_dataset(make_task_dataset(cfg), cfg.task.train_frac,
                       rng::derive_seed(cfg.master_seed, "split"));
}

std::vector<MetricRecord> run_merge_heatmap(const ExperimentConfig& cfg) {
  cfg.validate();
  print_warning(cfg.train);
  const auto [train_set, test_set] = make_task_split(cfg);
  const std::size_t dim = train_set.input_dim();
  const std::string name = to_string(ExperimentKind::MergeHeatmap);

  TrainConfig ref_cfg = cfg.train;
  ref_cfg.seed = rng::derive_seed(cfg.master_seed, "ref");
  ParticleSystem reference = init_system(cfg.n_infinity, dim, cfg.output_bound, ref_cfg);
  reference = train(reference, train_set, ref_cfg, nullptr, cfg.threads, false).system;
  const std::vector<double> ref_pred =
      network_eval_batch(reference, test_set.inputs, cfg.threads);

  // Pool of m_max trained members per width, one seeded unit per member.
  std::vector<std::vector<ParticleSystem>> pools(cfg.n_list.size());
  for (auto& pool : pools) pool.resize(cfg.m_max);
  parallel_for(cfg.n_list.size() * cfg.m_max, cfg.threads, [&](std::size_t u) {
    const std::size_t ni = u / cfg.m_max;
    const std::size_t j = u % cfg.m_max;
    const std::size_t width = cfg.n_list[ni];
    TrainConfig c = cfg.train;
    c.seed = rng::derive_seed(cfg.master_seed, "member", {width, j});
    try {
      ParticleSystem s = init_system(width, dim, cfg.output_bound, c);
      pools[ni][j] = train(s, train_set, c, nullptr, 1, false).system;
    } catch (const std::exception& e) {
      throw std::runtime_error("heatmap member (N=" + std::to_string(width) +
                               ", member=" + std::to_string(j) + "): " + e.what());
    }
  });

  std::vector<MetricRecord> records;
  const std::vector<std::size_t> sizes = cfg.merge_sizes();
  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    const std::size_t width = cfg.n_list[ni];
    for (std::size_t m : sizes) {
      std::vector<double> sups(cfg.subsample_repeats);
      parallel_for(cfg.subsample_repeats, cfg.threads, [&](std::size_t rep) {
        rng::Stream sub(rng::derive_seed(cfg.master_seed, "subset", {width, m, rep}));
        const std::vector<std::size_t> chosen = sub.sample_without_replacement(cfg.m_max, m);
        std::vector<ParticleSystem> members;
        members.reserve(m);
        for (std::size_t c : chosen) members.push_back(pools[ni][c]);
        const ParticleSystem merged = merge_systems(members);
        const std::vector<double> pred = network_eval_batch(merged, test_set.inputs, 1);
        double sup = 0.0;
        for (std::size_t t = 0; t < pred.size(); ++t)
          sup = std::max(sup, std::abs(pred[t] - ref_pred[t]));
        sups[rep] = sup;
      });

      MetricRecord row;
      row.experiment = name;
      row.n = static_cast<std::int64_t>(width);
      row.m = static_cast<std::int64_t>(m);
      double mean = 0.0, mean_log = 0.0;
      for (std::size_t rep = 0; rep < sups.size(); ++rep) {
        row.repeat = static_cast<std::int64_t>(rep);
        row.metric = MetricKind::SupNorm;
        row.value = sups[rep];
        records.push_back(row);
        mean += sups[rep];
        mean_log += safe_log(sups[rep]);
      }
      row.repeat.reset();
      row.metric = MetricKind::SupNorm;
      row.value = mean / static_cast<double>(sups.size());
      records.push_back(row);
      row.metric = MetricKind::LogSupNorm;
      row.value = mean_log / static_cast<double>(sups.size());
      records.push_back(row);
    }
  }
  return records;
}

std::vector<MetricRecord> run_lambda_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  print_warning(cfg.train);
  const auto [train_set, test_set] = make_task_split(cfg);
  const std::size_t dim = train_set.input_dim();
  const std::string name = to_string(ExperimentKind::LambdaSweep);

  const std::size_t n_lambda = cfg.lambda_list.size();
  const std::size_t n_sizes = cfg.n_list.size();
  std::vector<TrainResult> fits(n_lambda * n_sizes * cfg.m_max);
  parallel_for(fits.size(), cfg.threads, [&](std::size_t u) {
    const std::size_t li = u / (n_sizes * cfg.m_max);
    const std::size_t ni = (u / cfg.m_max) % n_sizes;
    const std::size_t j = u % cfg.m_max;
    const std::size_t width = cfg.n_list[ni];
    TrainConfig c = cfg.train;
    c.lambda = cfg.lambda_list[li];
    c.seed = rng::derive_seed(cfg.master_seed, "sweep", {li, width, j});
    try {
      ParticleSystem s = init_system(width, dim, cfg.output_bound, c);
      fits[u] = train(s, train_set, c, &test_set, 1, true);
    } catch (const std::exception& e) {
      throw std::runtime_error("sweep member (lambda=" + fmt_double(c.lambda) +
                               ", N=" + std::to_string(width) +
                               ", member=" + std::to_string(j) + "): " + e.what());
    }
  });

  auto test_losses = [&](const TrainResult& fit) {
    std::vector<double> losses;
    for (const MetricRecord& r : fit.trajectory)
      if (r.metric == MetricKind::TestLoss) losses.push_back(r.value);
    return losses;
  };

  std::vector<MetricRecord> records;
  for (std::size_t li = 0; li < n_lambda; ++li) {
    for (std::size_t ni = 0; ni < n_sizes; ++ni) {
      const std::size_t base = li * n_sizes * cfg.m_max + ni * cfg.m_max;
      MetricRecord row;
      row.experiment = name;
      row.lambda = cfg.lambda_list[li];
      row.n = static_cast<std::int64_t>(cfg.n_list[ni]);

      for (std::size_t e = 0; e < cfg.train.epochs; ++e) {
        double mean_log = 0.0;
        for (std::size_t j = 0; j < cfg.m_max; ++j)
          mean_log += safe_log(test_losses(fits[base + j])[e]);
        row.epoch = static_cast<std::int64_t>(e + 1);
        row.metric = MetricKind::LnMse;
        row.value = mean_log / static_cast<double>(cfg.m_max);
        records.push_back(row);
      }
      row.epoch.reset();

      for (std::size_t j = 0; j < cfg.m_max; ++j) {
        row.repeat = static_cast<std::int64_t>(j);
        row.metric = MetricKind::Mse;
        row.value = test_losses(fits[base + j]).back();
        records.push_back(row);
      }
      row.repeat.reset();

      std::vector<ParticleSystem> members;
      members.reserve(cfg.m_max);
      for (std::size_t j = 0; j < cfg.m_max; ++j) members.push_back(fits[base + j].system);
      const ParticleSystem merged = merge_systems(members);
      row.m = static_cast<std::int64_t>(cfg.m_max);
      row.metric = MetricKind::Mse;
      row.value = empirical_risk(merged, test_set, cfg.train.loss, cfg.threads);
      records.push_back(row);
    }
  }
  return records;
}

std::vector<MetricRecord> run_stationary_check(const ExperimentConfig& cfg) {
  cfg.validate();
  print_warning(cfg.train);
  const std::string name = to_string(ExperimentKind::StationaryCheck);

  TrainConfig c = cfg.train;
  c.seed = rng::derive_seed(cfg.master_seed, "stationary");
  c.regularizer_only = true;
  ParticleSystem s =
      init_system(cfg.stationary.particles, cfg.stationary.input_dim, cfg.output_bound, c);
  const Dataset unused;

  std::vector<MetricRecord> records;
  for (std::size_t k = 0; k < cfg.stationary.steps; ++k) {
    s = mfld_step(s, unused, c, k, {}, cfg.threads);
    const std::size_t done = k + 1;
    if (done % cfg.stationary.record_every == 0 || done == cfg.stationary.steps) {
      MetricRecord row;
      row.experiment = name;
      row.lambda = c.lambda;
      row.epoch = static_cast<std::int64_t>(done);
      row.metric = MetricKind::Variance;
      row.value = coordinate_variance(s);
      records.push_back(row);
    }
  }
  return records;
}

std::vector<MetricRecord> run_lora_merge(const ExperimentConfig& cfg) {
  cfg.validate();
  const LoraRunConfig& lr = cfg.lora;
  const std::string name = to_string(ExperimentKind::LoraMerge);

  const auto [task, train_data] = gen_lowrank_task(
      lr.k, lr.d, lr.target_rank, lr.n, lr.noise_std,
      rng::derive_seed(cfg.master_seed, "lora_task"));
  const LoraData test_data =
      sample_task_data(task, lr.n_test, rng::derive_seed(cfg.master_seed, "lora_test"));

  std::vector<LoraAdapter> adapters(lr.members);
  parallel_for(lr.members, cfg.threads, [&](std::size_t j) {
    LoraTrainConfig c;
    c.eta = lr.eta;
    c.lambda = lr.lambda;
    c.l2_coeff = lr.l2_coeff;
    c.weight_decay = lr.weight_decay;
    c.epochs = lr.epochs;
    c.init_std = lr.init_std;
    c.seed = rng::derive_seed(cfg.master_seed, "lora_member", {j});
    try {
      adapters[j] = finetune_lora(task, lr.rank, c, train_data);
    } catch (const std::exception& e) {
      throw std::runtime_error("lora member " + std::to_string(j) + ": " + e.what());
    }
  });

  std::vector<MetricRecord> records;
  MetricRecord row;
  row.experiment = name;
  row.n = static_cast<std::int64_t>(lr.rank);
  row.lambda = lr.lambda;
  double mean = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < lr.members; ++j) {
    const double mse = lora_evaluate(task.base, adapters[j].delta(), test_data);
    row.repeat = static_cast<std::int64_t>(j);
    row.metric = MetricKind::Mse;
    row.value = mse;
    records.push_back(row);
    mean += mse;
    best = std::min(best, mse);
  }
  row.repeat.reset();
  row.m = static_cast<std::int64_t>(lr.members);

  const Matrix merged = lora_merge(adapters);
  row.metric = MetricKind::Mse;
  row.value = lora_evaluate(task.base, merged, test_data);
  records.push_back(row);
  row.metric = MetricKind::MseMean;
  row.value = mean / static_cast<double>(lr.members);
  records.push_back(row);
  row.metric = MetricKind::MseBest;
  row.value = best;
  records.push_back(row);
  return records;
}

namespace {

struct Rgb {
  double r, g, b;
};

// Fixed 2-stop map over the data's log range: blue at the minimum,
// red at the maximum.
constexpr Rgb kLowColor{33.0, 102.0, 172.0};
constexpr Rgb kHighColor{178.0, 24.0, 43.0};

Rgb lerp_color(double t) {
  return {kLowColor.r + t * (kHighColor.r - kLowColor.r),
          kLowColor.g + t * (kHighColor.g - kLowColor.g),
          kLowColor.b + t * (kHighColor.b - kLowColor.b)};
}

std::string rgb_string(const Rgb& c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", static_cast<int>(std::lround(c.r)),
                static_cast<int>(std::lround(c.g)), static_cast<int>(std::lround(c.b)));
  return buf;
}

std::string short_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

void emit_heatmap_svg(const std::vector<MetricRecord>& records,
                      const std::filesystem::path& path) {
  std::map<std::pair<std::int64_t, std::int64_t>, double> cells;
  for (const MetricRecord& r : records)
    if (r.metric == MetricKind::SupNorm && r.n && r.m && !r.repeat)
      cells[{*r.n, *r.m}] = r.value;
  if (cells.empty())
    throw std::invalid_argument("no aggregated sup_norm records to plot");

  std::set<std::int64_t> n_set, m_set;
  for (const auto& [key, value] : cells) {
    n_set.insert(key.first);
    m_set.insert(key.second);
  }
  const std::vector<std::int64_t> ns(n_set.begin(), n_set.end());
  const std::vector<std::int64_t> ms(m_set.begin(), m_set.end());
  for (std::int64_t n : ns)
    for (std::int64_t m : ms)
      if (!cells.count({n, m}))
        throw std::invalid_argument("heatmap grid is missing cell N=" + std::to_string(n) +
                                    ", M=" + std::to_string(m));

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [key, value] : cells) {
    lo = std::min(lo, safe_log(value));
    hi = std::max(hi, safe_log(value));
  }
  const double range = hi > lo ? hi - lo : 1.0;

  const double cell_w = 76, cell_h = 48;
  const double left = 70, top = 46, right = 24, bottom = 58;
  const double grid_w = cell_w * static_cast<double>(ns.size());
  const double grid_h = cell_h * static_cast<double>(ms.size());
  const double width = left + grid_w + right;
  const double height = top + grid_h + bottom;

  std::string svg;
  char buf[512];
  auto add = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    svg += buf;
  };

  add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
      "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\">\n",
      width, height, width, height);
  svg += "<desc>Mean sup-norm per (N, M) cell. Color: log-scale interpolation from "
         "rgb(33,102,172) at the minimum to rgb(178,24,43) at the maximum.</desc>\n";
  add("<rect width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", width, height);
  add("<text x=\"%.1f\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">"
      "mean sup-norm of merged networks vs reference</text>\n",
      left + grid_w / 2);

  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    // Largest M on the top row so M increases upward.
    const std::int64_t m = ms[ms.size() - 1 - mi];
    const double y = top + cell_h * static_cast<double>(mi);
    for (std::size_t ci = 0; ci < ns.size(); ++ci) {
      const std::int64_t n = ns[ci];
      const double x = left + cell_w * static_cast<double>(ci);
      const double v = cells.at({n, m});
      const double t = (safe_log(v) - lo) / range;
      const Rgb color = lerp_color(t);
      const double luminance = 0.299 * color.r + 0.587 * color.g + 0.114 * color.b;
      add("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\" "
          "stroke=\"white\" stroke-width=\"1\"/>\n",
          x, y, cell_w, cell_h, rgb_string(color).c_str());
      add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" "
          "fill=\"%s\">%s</text>\n",
          x + cell_w / 2, y + cell_h / 2 + 4, luminance > 140.0 ? "black" : "white",
          short_value(v).c_str());
    }
    add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\">%lld</text>\n",
        left - 8, y + cell_h / 2 + 4, static_cast<long long>(m));
  }
  for (std::size_t ci = 0; ci < ns.size(); ++ci) {
    add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">%lld</text>\n",
        left + cell_w * (static_cast<double>(ci) + 0.5), top + grid_h + 18,
        static_cast<long long>(ns[ci]));
  }
  add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\">N</text>\n",
      left + grid_w / 2, top + grid_h + 40);
  add("<text x=\"18\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 18 %.1f)\">M</text>\n",
      top + grid_h / 2, top + grid_h / 2);
  svg += "</svg>\n";
  write_text_file(path, svg);
}

void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  write_text_file(dir / "manifest.json", cfg.to_json().dump(2) + "\n");
}

}  // namespace mfl
