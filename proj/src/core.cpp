#include "mfl/core.hpp"

#include <cmath>
#include <stdexcept>

#include "mfl/parallel.hpp"

namespace mfl {

Particle Particle::from_coords(std::vector<double> c) {
  if (c.size() < 3)
    throw std::invalid_argument("particle needs at least 3 coordinates, got " +
                                std::to_string(c.size()));
  Particle p;
  p.coords = std::move(c);
  return p;
}

std::size_t ParticleSystem::input_dim() const {
  if (particles.empty()) throw std::invalid_argument("empty particle system");
  return particles.front().input_dim();
}

void ParticleSystem::validate() const {
  if (particles.empty()) throw std::invalid_argument("empty particle system");
  if (!(output_bound > 0.0))
    throw std::invalid_argument("output_bound must be positive, got " +
                                std::to_string(output_bound));
  const std::size_t dim = particles.front().dim();
  if (dim < 3) throw std::invalid_argument("particles need at least 3 coordinates");
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (particles[i].dim() != dim)
      throw std::invalid_argument("particle " + std::to_string(i) + " has dimension " +
                                  std::to_string(particles[i].dim()) + ", expected " +
                                  std::to_string(dim));
    for (double v : particles[i].coords)
      if (!std::isfinite(v))
        throw std::invalid_argument("particle " + std::to_string(i) +
                                    " has a non-finite coordinate");
  }
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Logistic: return "logistic";
    case LossKind::SquaredError: return "squared_error";
  }
  throw std::invalid_argument("unknown LossKind");
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "logistic") return LossKind::Logistic;
  if (s == "squared_error") return LossKind::SquaredError;
  throw std::invalid_argument("unknown loss: " + s);
}

double neuron_eval(const Particle& p, std::span<const double> z, double output_bound) {
  if (z.size() != p.input_dim())
    throw std::invalid_argument("input has dimension " + std::to_string(z.size()) +
                                ", neuron expects " + std::to_string(p.input_dim()));
  const auto w = p.weights();
  double pre = p.bias();
  for (std::size_t t = 0; t < w.size(); ++t) pre += w[t] * z[t];
  return output_bound * std::tanh(p.gain()) * std::tanh(pre);
}

double network_eval(const ParticleSystem& s, std::span<const double> z) {
  if (s.particles.empty()) throw std::invalid_argument("empty particle system");
  double sum = 0.0;
  for (const Particle& p : s.particles) sum += neuron_eval(p, z, s.output_bound);
  return sum / static_cast<double>(s.size());
}

std::vector<double> network_eval_batch(const ParticleSystem& s,
                                       const std::vector<std::vector<double>>& inputs,
                                       int threads) {
  std::vector<double> out(inputs.size());
  parallel_for(inputs.size(), threads,
               [&](std::size_t j) { out[j] = network_eval(s, inputs[j]); });
  return out;
}

double loss_eval(LossKind kind, double a, double y) {
  switch (kind) {
    case LossKind::Logistic: {
      if (y != 1.0 && y != -1.0)
        throw std::invalid_argument("logistic loss needs labels in {-1, +1}, got " +
                                    std::to_string(y));
      const double v = y * a;
      return std::max(0.0, -v) + std::log1p(std::exp(-std::abs(v)));
    }
    case LossKind::SquaredError: {
      const double r = a - y;
      return r * r;
    }
  }
  throw std::invalid_argument("unknown LossKind");
}

double loss_deriv(LossKind kind, double a, double y) {
  switch (kind) {
    case LossKind::Logistic: {
      if (y != 1.0 && y != -1.0)
        throw std::invalid_argument("logistic loss needs labels in {-1, +1}, got " +
                                    std::to_string(y));
      const double v = y * a;
      // -y * sigmoid(-v), branched so exp never overflows.
      if (v >= 0.0) {
        const double e = std::exp(-v);
        return -y * e / (1.0 + e);
      }
      return -y / (1.0 + std::exp(v));
    }
    case LossKind::SquaredError:
      return 2.0 * (a - y);
  }
  throw std::invalid_argument("unknown LossKind");
}

double empirical_risk(const ParticleSystem& s, const Dataset& data, LossKind kind,
                      int threads) {
  data.validate();
  const std::vector<double> preds = network_eval_batch(s, data.inputs, threads);
  double sum = 0.0;
  for (std::size_t j = 0; j < preds.size(); ++j)
    sum += loss_eval(kind, preds[j], data.labels[j]);
  return sum / static_cast<double>(preds.size());
}

std::vector<double> loss_derivs(const ParticleSystem& s, const Dataset& data, LossKind kind,
                                int threads) {
  data.validate();
  std::vector<double> derivs = network_eval_batch(s, data.inputs, threads);
  for (std::size_t j = 0; j < derivs.size(); ++j)
    derivs[j] = loss_deriv(kind, derivs[j], data.labels[j]);
  return derivs;
}

std::vector<double> first_variation_grad(const ParticleSystem& s, const Dataset& data,
                                         LossKind kind, double l2_coeff, std::size_t i) {
  return first_variation_grad(s, loss_derivs(s, data, kind), data, l2_coeff, i);
}

std::vector<double> first_variation_grad(const ParticleSystem& s, std::span<const double> derivs,
                                         const Dataset& data, double l2_coeff, std::size_t i) {
  if (i >= s.size())
    throw std::invalid_argument("particle index " + std::to_string(i) + " out of range for " +
                                std::to_string(s.size()) + " particles");
  if (derivs.size() != data.size())
    throw std::invalid_argument("got " + std::to_string(derivs.size()) +
                                " loss derivatives for " + std::to_string(data.size()) +
                                " examples");
  const Particle& p = s.particles[i];
  const std::size_t d = p.input_dim();
  if (data.input_dim() != d)
    throw std::invalid_argument("data dimension " + std::to_string(data.input_dim()) +
                                " does not match particle input dimension " + std::to_string(d));

  std::vector<double> grad(p.dim());
  for (std::size_t t = 0; t < p.dim(); ++t) grad[t] = 2.0 * l2_coeff * p.coords[t];

  const double inv_n = 1.0 / static_cast<double>(data.size());
  const auto w = p.weights();
  const double tc = std::tanh(p.gain());
  const double sech2c = 1.0 - tc * tc;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const std::vector<double>& z = data.inputs[j];
    double u = p.bias();
    for (std::size_t t = 0; t < d; ++t) u += w[t] * z[t];
    const double tu = std::tanh(u);
    const double sech2u = 1.0 - tu * tu;
    const double a = derivs[j] * inv_n * s.output_bound;
    const double base = a * tc * sech2u;
    for (std::size_t t = 0; t < d; ++t) grad[t] += base * z[t];
    grad[d] += base;
    grad[d + 1] += a * sech2c * tu;
  }
  return grad;
}

double classification_accuracy(const ParticleSystem& s, const Dataset& data, int threads) {
  data.validate();
  const std::vector<double> preds = network_eval_batch(s, data.inputs, threads);
  std::size_t hits = 0;
  for (std::size_t j = 0; j < preds.size(); ++j) {
    const double sign = preds[j] >= 0.0 ? 1.0 : -1.0;
    if (sign == data.labels[j]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace mfl
