#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfl/core.hpp"
#include "mfl/matrix.hpp"

namespace mfl {

// Concatenates the members' particles into one system. The merged network is
// exactly the particle-count-weighted mean of the member networks; for
// equal-size members that is the plain mean. Members must agree on input
// dimension and output bound.
ParticleSystem merge_systems(std::span<const ParticleSystem> systems);

// Keeps a uniform random subset of keep_count particles (without
// replacement), preserving their original order.
ParticleSystem prune_random(const ParticleSystem& s, std::size_t keep_count, std::uint64_t seed);

// One low-rank adapter: delta = scale * up * down with down (rank x d) the
// input-side factor and up (k x rank) the output-side factor.
struct LoraAdapter {
  Matrix down;
  Matrix up;
  double scale = 1.0;

  std::size_t rank() const { return down.rows; }
  std::size_t in_dim() const { return down.cols; }
  std::size_t out_dim() const { return up.rows; }

  void validate() const;
  Matrix delta() const;
};

// Mean of the members' deltas: (1/M) sum_j scale_j * up_j * down_j.
Matrix lora_merge(std::span<const LoraAdapter> adapters);

}  // namespace mfl
