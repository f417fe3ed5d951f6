#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfl/data.hpp"

namespace mfl {

// One neuron's parameters, stored flat as (w_1..w_d, b, c): input weights,
// input bias, and the gain that sets the neuron's amplitude through tanh(c).
struct Particle {
  std::vector<double> coords;

  Particle() = default;
  explicit Particle(std::size_t input_dim) : coords(input_dim + 2, 0.0) {}
  static Particle from_coords(std::vector<double> c);

  std::size_t dim() const { return coords.size(); }
  std::size_t input_dim() const { return coords.size() - 2; }
  std::span<const double> weights() const { return {coords.data(), input_dim()}; }
  std::span<double> weights() { return {coords.data(), input_dim()}; }
  double bias() const { return coords[coords.size() - 2]; }
  double& bias() { return coords[coords.size() - 2]; }
  double gain() const { return coords.back(); }
  double& gain() { return coords.back(); }
};

// A two-layer network: the empirical mean of its neurons. Operations treat
// systems as values and return new ones.
struct ParticleSystem {
  std::vector<Particle> particles;
  double output_bound = 1.0;  // R; |h| <= R for every neuron, |f| <= R for the mean
  std::string provenance;

  std::size_t size() const { return particles.size(); }
  std::size_t input_dim() const;

  // Throws std::invalid_argument unless non-empty, dimensionally uniform,
  // finite, with output_bound > 0.
  void validate() const;
};

enum class LossKind { Logistic, SquaredError };
std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

// h(x, z) = R * tanh(c) * tanh(w . z + b).
double neuron_eval(const Particle& p, std::span<const double> z, double output_bound);

// f(z) = (1/N) sum_i h(x_i, z), summed in particle-index order.
double network_eval(const ParticleSystem& s, std::span<const double> z);

std::vector<double> network_eval_batch(const ParticleSystem& s,
                                       const std::vector<std::vector<double>>& inputs,
                                       int threads = 1);

// Logistic loss expects labels in {-1, +1} and is computed in the
// overflow-free form max(0, -v) + log1p(exp(-|v|)) with v = y * a.
// Squared error is (a - y)^2; its derivative 2 (a - y) is not halved.
double loss_eval(LossKind kind, double a, double y);
double loss_deriv(LossKind kind, double a, double y);

// (1/n) sum_j loss(f(z_j), y_j).
double empirical_risk(const ParticleSystem& s, const Dataset& data, LossKind kind,
                      int threads = 1);

// Per-example l'(f(z_j), y_j) with f evaluated once for the whole batch.
std::vector<double> loss_derivs(const ParticleSystem& s, const Dataset& data, LossKind kind,
                                int threads = 1);

// Gradient of the first variation of the regularized objective at particle i:
//   (1/n) sum_j l'(f(z_j), y_j) grad_x h(x_i, z_j) + 2 l2_coeff x_i.
// This equals N times the gradient of the lifted objective with respect to
// particle i, so the same particle in a larger system sees the same drift.
std::vector<double> first_variation_grad(const ParticleSystem& s, const Dataset& data,
                                         LossKind kind, double l2_coeff, std::size_t i);
std::vector<double> first_variation_grad(const ParticleSystem& s, std::span<const double> derivs,
                                         const Dataset& data, double l2_coeff, std::size_t i);

// Fraction of examples with sign(f(z)) == y; f = 0 counts as +1.
double classification_accuracy(const ParticleSystem& s, const Dataset& data, int threads = 1);

}  // namespace mfl
