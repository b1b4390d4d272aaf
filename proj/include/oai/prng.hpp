#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oai {

// SplitMix64. Part of the external sampling contract: identical seeds must
// reproduce identical draws on every platform, so the algorithm is pinned
// here and named in the README.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t bounded(std::uint64_t bound) {
    std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// First k elements of a Fisher-Yates partial shuffle, in draw order.
// `items` must already be in the contract order (lexicographically sorted).
template <typename T>
std::vector<T> partial_shuffle_take(std::vector<T> items, std::size_t k, SplitMix64& rng) {
  const std::size_t n = items.size();
  if (k > n) k = n;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

}  // namespace oai
