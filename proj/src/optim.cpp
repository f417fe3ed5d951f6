#include "mfl/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "mfl/parallel.hpp"

namespace mfl {

std::string TrainConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (l2_coeff < 0.0) throw std::invalid_argument("l2_coeff must be >= 0");
  if (init_std < 0.0) throw std::invalid_argument("init_std must be >= 0");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (eta * l2_coeff >= 0.5)
    return "eta * l2_coeff = " + std::to_string(eta * l2_coeff) +
           " >= 0.5; the regularizer step is no longer a contraction";
  return "";
}

ParticleSystem init_system(std::size_t n_particles, std::size_t input_dim, double output_bound,
                           const TrainConfig& cfg) {
  if (n_particles == 0) throw std::invalid_argument("need at least one particle");
  if (input_dim == 0) throw std::invalid_argument("input_dim must be positive");
  if (!(output_bound > 0.0)) throw std::invalid_argument("output_bound must be positive");

  ParticleSystem s;
  s.output_bound = output_bound;
  s.provenance = "init(seed=" + std::to_string(cfg.seed) + ",N=" + std::to_string(n_particles) +
                 ",input_dim=" + std::to_string(input_dim) +
                 ",init_std=" + std::to_string(cfg.init_std) + ")";
  s.particles.assign(n_particles, Particle(input_dim));
  for (std::size_t i = 0; i < n_particles; ++i) {
    rng::Stream stream(rng::derive_seed(cfg.seed, "init", {i}));
    for (double& c : s.particles[i].coords) c = cfg.init_std * stream.gauss();
  }
  return s;
}

ParticleSystem mfld_step(const ParticleSystem& s, const Dataset& data, const TrainConfig& cfg,
                         std::uint64_t step_index, std::span<const std::uint64_t> noise_keys,
                         int threads) {
  if (s.particles.empty()) throw std::invalid_argument("empty particle system");
  if (!noise_keys.empty() && noise_keys.size() != s.size())
    throw std::invalid_argument("got " + std::to_string(noise_keys.size()) +
                                " noise keys for " + std::to_string(s.size()) + " particles");

  std::vector<double> derivs;
  if (!cfg.regularizer_only) {
    if (data.input_dim() != s.input_dim())
      throw std::invalid_argument("data dimension " + std::to_string(data.input_dim()) +
                                  " does not match network input dimension " +
                                  std::to_string(s.input_dim()));
    derivs = loss_derivs(s, data, cfg.loss, threads);
  }

  const double noise_std = std::sqrt(2.0 * cfg.lambda * cfg.eta);
  ParticleSystem next = s;
  parallel_for(s.size(), threads, [&](std::size_t i) {
    std::vector<double> grad;
    if (cfg.regularizer_only) {
      grad.resize(s.particles[i].dim());
      for (std::size_t t = 0; t < grad.size(); ++t)
        grad[t] = 2.0 * cfg.l2_coeff * s.particles[i].coords[t];
    } else {
      grad = first_variation_grad(s, derivs, data, cfg.l2_coeff, i);
    }

    Particle& p = next.particles[i];
    if (noise_std > 0.0) {
      const std::uint64_t key = noise_keys.empty() ? i : noise_keys[i];
      rng::Stream noise(rng::derive_seed(cfg.seed, "noise", {step_index, key}));
      for (std::size_t t = 0; t < p.dim(); ++t)
        p.coords[t] = s.particles[i].coords[t] - cfg.eta * grad[t] + noise_std * noise.gauss();
    } else {
      for (std::size_t t = 0; t < p.dim(); ++t)
        p.coords[t] = s.particles[i].coords[t] - cfg.eta * grad[t];
    }
  });
  return next;
}

TrainResult train(const ParticleSystem& initial, const Dataset& data, const TrainConfig& cfg,
                  const Dataset* test, int threads, bool record_trajectory) {
  initial.validate();
  cfg.validate();
  if (!cfg.regularizer_only) data.validate();

  TrainResult result;
  result.system = initial;
  for (std::size_t k = 0; k < cfg.epochs; ++k) {
    result.system = mfld_step(result.system, data, cfg, k, {}, threads);
    if (!record_trajectory) continue;
    MetricRecord row;
    row.experiment = "train";
    row.epoch = static_cast<std::int64_t>(k + 1);
    if (!cfg.regularizer_only) {
      row.metric = MetricKind::TrainLoss;
      row.value = empirical_risk(result.system, data, cfg.loss, threads);
      result.trajectory.push_back(row);
    }
    if (test) {
      row.metric = MetricKind::TestLoss;
      row.value = empirical_risk(result.system, *test, cfg.loss, threads);
      result.trajectory.push_back(row);
    }
  }
  result.system.validate();
  return result;
}

void noisy_adamw_step(std::span<double> params, std::span<const double> grad, AdamWState& state,
                      double eta_k, double lambda, double weight_decay, rng::Stream& noise) {
  if (params.size() != grad.size())
    throw std::invalid_argument("params have " + std::to_string(params.size()) +
                                " entries, grad has " + std::to_string(grad.size()));
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("optimizer state sized " + std::to_string(state.m.size()) +
                                " does not match " + std::to_string(params.size()) + " params");
  if (!(eta_k > 0.0)) throw std::invalid_argument("eta_k must be positive");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= eta_k * (m_hat / (std::sqrt(v_hat) + state.eps) + weight_decay * params[i]);
  }
  if (lambda > 0.0) {
    const double noise_std = std::sqrt(2.0 * lambda * eta_k);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += noise_std * noise.gauss();
  }
}

}  // namespace mfl
