#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfl/core.hpp"
#include "mfl/data.hpp"
#include "mfl/records.hpp"
#include "mfl/rng.hpp"

namespace mfl {

struct TrainConfig {
  double eta = 0.1;          // step size
  double lambda = 0.01;      // temperature; injected noise has std sqrt(2 * lambda * eta)
  double l2_coeff = 0.1;     // coefficient of the per-particle L2 regularizer
  std::size_t epochs = 200;  // full-batch steps
  LossKind loss = LossKind::Logistic;
  std::uint64_t seed = 0;
  double init_std = 1.0;
  // Drop the data term so only the regularizer and the noise act; the
  // stationary-law checks use this.
  bool regularizer_only = false;

  // Throws std::invalid_argument on nonsensical values. Returns a warning
  // string when eta * l2_coeff >= 1/2 (the pure-contraction step becomes
  // oscillatory or divergent); empty otherwise.
  std::string validate() const;
};

// N particles, every coordinate i.i.d. Normal(0, init_std^2) from the
// per-particle stream (seed, "init", i).
ParticleSystem init_system(std::size_t n_particles, std::size_t input_dim, double output_bound,
                           const TrainConfig& cfg);

// One synchronous noisy gradient step on every particle:
//   x_i <- x_i - eta * grad_i + sqrt(2 * lambda * eta) * xi_i,
// with grad_i the first-variation gradient at the pre-step system and xi_i
// standard normal. The noise for particle i at this step comes from the
// stream (seed, "noise", step_index, key_i); keys default to particle
// positions, so passing permuted keys with permuted particles reproduces the
// permuted result. lambda = 0 draws no noise at all.
ParticleSystem mfld_step(const ParticleSystem& s, const Dataset& data, const TrainConfig& cfg,
                         std::uint64_t step_index,
                         std::span<const std::uint64_t> noise_keys = {}, int threads = 1);

struct TrainResult {
  ParticleSystem system;
  // Per-epoch train_loss (and test_loss when a test set was supplied),
  // epochs numbered from 1.
  std::vector<MetricRecord> trajectory;
};

// cfg.epochs full-batch steps from the given system. Callers are expected to
// surface the validate() warning; train only enforces the hard checks.
// record_trajectory = false skips the per-epoch loss evaluations.
TrainResult train(const ParticleSystem& initial, const Dataset& data, const TrainConfig& cfg,
                  const Dataset* test = nullptr, int threads = 1,
                  bool record_trajectory = true);

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamWState for_size(std::size_t n) {
    AdamWState st;
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
    return st;
  }
};

// One AdamW step (bias-corrected moments, decoupled weight decay) followed by
// Gaussian noise with std sqrt(2 * lambda * eta_k) per coordinate. Updates
// params and state in place; lambda = 0 draws nothing from the stream.
void noisy_adamw_step(std::span<double> params, std::span<const double> grad, AdamWState& state,
                      double eta_k, double lambda, double weight_decay, rng::Stream& noise);

}  // namespace mfl
