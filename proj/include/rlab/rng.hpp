#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace rlab {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` under `master_seed`. Streams depend only on the
/// pair, never on which worker runs them or in what order.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index,
                                    std::uint64_t domain = 0) noexcept {
  return mix64(mix64(master_seed ^ mix64(domain)) + mix64(index + 1));
}

/// Per-trajectory normal generator.
class NormalStream {
 public:
  NormalStream(std::uint64_t master_seed, std::uint64_t index, std::uint64_t domain = 0)
      : engine_(stream_seed(master_seed, index, domain)) {}

  double operator()() { return normal_(engine_); }

  void fill(std::span<double> out) {
    for (double& x : out) x = normal_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rlab
