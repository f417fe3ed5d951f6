#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace mfl::rng {

// SplitMix64 (Steele, Lea, Flood 2014). 64-bit state, one mixing round per
// output. Satisfies UniformRandomBitGenerator.
struct SplitMix64 {
  using result_type = std::uint64_t;

  std::uint64_t state = 0;

  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// Absorbs v into h with one SplitMix64 finalizer round. Advances even for v = 0.
std::uint64_t mix(std::uint64_t h, std::uint64_t v);

// FNV-1a over the bytes of tag.
std::uint64_t hash_tag(std::string_view tag);

// Seed for the sub-stream identified by (master, tag, indices). Distinct
// argument tuples give streams that are independent for every practical
// purpose, so callers can key noise by (step, particle), init by particle
// index, and so on, without any shared state.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices = {});

// One deterministic random stream. The draw order is part of the
// reproducibility contract; never share a Stream between threads.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  double gauss() { return normal_(engine_); }
  double uniform01() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform in {0, ..., n-1}. n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from {0, ..., n-1}, uniform over subsets, returned in
  // ascending order so downstream consumers are insensitive to draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace mfl::rng
