#include "mfl/ensemble.hpp"

#include <stdexcept>
#include <string>

#include "mfl/rng.hpp"

namespace mfl {

ParticleSystem merge_systems(std::span<const ParticleSystem> systems) {
  if (systems.empty()) throw std::invalid_argument("merge needs at least one system");
  for (const ParticleSystem& s : systems) s.validate();
  const std::size_t dim = systems.front().input_dim();
  const double bound = systems.front().output_bound;
  for (std::size_t j = 1; j < systems.size(); ++j) {
    if (systems[j].input_dim() != dim)
      throw std::invalid_argument("merge member " + std::to_string(j) + " has input_dim " +
                                  std::to_string(systems[j].input_dim()) + ", expected " +
                                  std::to_string(dim));
    if (systems[j].output_bound != bound)
      throw std::invalid_argument("merge member " + std::to_string(j) + " has output_bound " +
                                  std::to_string(systems[j].output_bound) + ", expected " +
                                  std::to_string(bound));
  }

  ParticleSystem merged;
  merged.output_bound = bound;
  merged.provenance = "merge(M=" + std::to_string(systems.size()) + ")";
  std::size_t total = 0;
  for (const ParticleSystem& s : systems) total += s.size();
  merged.particles.reserve(total);
  for (const ParticleSystem& s : systems)
    merged.particles.insert(merged.particles.end(), s.particles.begin(), s.particles.end());
  return merged;
}

ParticleSystem prune_random(const ParticleSystem& s, std::size_t keep_count,
                            std::uint64_t seed) {
  s.validate();
  if (keep_count == 0 || keep_count > s.size())
    throw std::invalid_argument("prune: keep_count " + std::to_string(keep_count) +
                                " out of range for " + std::to_string(s.size()) + " particles");

  rng::Stream stream(rng::derive_seed(seed, "prune"));
  const std::vector<std::size_t> keep = stream.sample_without_replacement(s.size(), keep_count);

  ParticleSystem pruned;
  pruned.output_bound = s.output_bound;
  pruned.provenance = "prune(keep=" + std::to_string(keep_count) + ",from=" +
                      std::to_string(s.size()) + ",seed=" + std::to_string(seed) + ")";
  pruned.particles.reserve(keep_count);
  for (std::size_t i : keep) pruned.particles.push_back(s.particles[i]);
  return pruned;
}

void LoraAdapter::validate() const {
  if (down.rows == 0 || down.cols == 0 || up.rows == 0 || up.cols == 0)
    throw std::invalid_argument("adapter factors must be non-empty");
  if (up.cols != down.rows)
    throw std::invalid_argument("adapter rank mismatch: up has " + std::to_string(up.cols) +
                                " columns, down has " + std::to_string(down.rows) + " rows");
}

Matrix LoraAdapter::delta() const {
  validate();
  return scaled(matmul(up, down), scale);
}

Matrix lora_merge(std::span<const LoraAdapter> adapters) {
  if (adapters.empty()) throw std::invalid_argument("lora_merge needs at least one adapter");
  Matrix sum = adapters.front().delta();
  for (std::size_t j = 1; j < adapters.size(); ++j) {
    const Matrix d = adapters[j].delta();
    if (!d.same_shape(sum))
      throw std::invalid_argument("lora_merge member " + std::to_string(j) + " has delta shape " +
                                  std::to_string(d.rows) + "x" + std::to_string(d.cols) +
                                  ", expected " + std::to_string(sum.rows) + "x" +
                                  std::to_string(sum.cols));
    for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += d.data[i];
  }
  return scaled(sum, 1.0 / static_cast<double>(adapters.size()));
}

}  // namespace mfl
