#include "mfl/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace mfl::rng {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h += 0x9e3779b97f4a7c15ULL + v;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = mix(master, hash_tag(tag));
  for (std::uint64_t idx : indices) h = mix(h, idx);
  return h;
}

std::uint64_t Stream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Stream::below: n must be positive");
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

std::vector<std::size_t> Stream::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n)
    throw std::invalid_argument("sample_without_replacement: k (" + std::to_string(k) +
                                ") exceeds n (" + std::to_string(n) + ")");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  // Partial Fisher-Yates: after i swaps the prefix holds the sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace mfl::rng
