#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mfl/ensemble.hpp"
#include "mfl/matrix.hpp"

namespace mfl {

// Linear-map fitting problem: recover target = base + low-rank correction
// from noisy observations y = target * z + noise.
struct LoraTask {
  Matrix base;    // frozen k x d map
  Matrix target;  // k x d map the data comes from
  std::size_t target_rank = 0;
  std::size_t n = 0;  // training examples drawn when the task was generated
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

// Vector-valued regression pairs for linear-map fitting.
struct LoraData {
  std::vector<std::vector<double>> inputs;   // z in R^d
  std::vector<std::vector<double>> targets;  // y in R^k

  std::size_t size() const { return inputs.size(); }
  void validate() const;
};

// base has standard normal entries scaled by 1/sqrt(d); the correction is a
// rank target_rank product of standard normal factors scaled by 1/sqrt(d).
// Inputs are standard normal; observations get per-coordinate noise.
std::pair<LoraTask, LoraData> gen_lowrank_task(std::size_t k, std::size_t d,
                                               std::size_t target_rank, std::size_t n,
                                               double noise_std, std::uint64_t seed);

// Fresh examples from the same task (used for held-out evaluation).
LoraData sample_task_data(const LoraTask& task, std::size_t n, std::uint64_t seed);

// (base + adapter.delta()) * z.
std::vector<double> lora_forward(const Matrix& base, const LoraAdapter& adapter,
                                 std::span<const double> z);

struct LoraTrainConfig {
  double eta = 0.01;
  double lambda = 1e-5;       // temperature of the injected update noise
  double l2_coeff = 1e-4;     // L2 penalty on the factor entries, part of the objective
  double weight_decay = 0.0;  // decoupled AdamW decay, off by default
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  double init_std = 1.0;      // std of the down factor's initial entries; up starts at zero
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Objective: mean over examples of |(base + delta) z - y|^2 / k, plus
// l2_coeff * (|down|_F^2 + |up|_F^2). Returns the value; fills the factor
// gradients when the pointers are non-null.
double lora_loss_grad(const Matrix& base, const LoraAdapter& adapter, const LoraData& data,
                      double l2_coeff, Matrix* grad_down, Matrix* grad_up);

// Full-batch noisy AdamW on the factor entries.
LoraAdapter finetune_lora(const LoraTask& task, std::size_t rank, const LoraTrainConfig& cfg,
                          const LoraData& data);

// Mean over examples of |(base + delta) z - y|^2 / k.
double lora_evaluate(const Matrix& base, const Matrix& delta, const LoraData& data);

}  // namespace mfl
