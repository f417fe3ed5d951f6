#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "mfl/data.hpp"

namespace mfl {

// Two concentric noisy circles in the plane; inner circle is class -1,
// outer is class +1. Points are generated alternately and then shuffled.
struct CirclesParams {
  std::size_t n = 200;
  double r_inner = 1.0;
  double r_outer = 2.0;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

// Inputs uniform in the radius-r ball of R^d; the target averages tanh over
// the first k coordinates and scales by r_bar.
struct MultiIndexParams {
  std::size_t n = 500;
  std::size_t d = 100;
  std::size_t k = 100;
  double r = 5.0;
  double r_bar = 100.0;
  std::uint64_t seed = 0;
};

Dataset gen_circles(const CirclesParams& params);
Dataset gen_multi_index(const MultiIndexParams& params);

// Random split into (train, test) with floor(n * train_frac) training rows.
// Both sides must end up non-empty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_frac,
                                          std::uint64_t seed);

// CSV with header "y,z0,z1,...", full round-trip precision, plus a JSON
// sidecar (same stem, .json) holding task, params, split, and seed.
void dataset_write(const Dataset& data, const std::filesystem::path& csv_path);
Dataset dataset_read(const std::filesystem::path& csv_path);

}  // namespace mfl
