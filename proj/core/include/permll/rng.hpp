#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace permll {

// Serializable position of an Rng: reseeding with `seed` and discarding
// `position` raw draws reproduces the generator exactly.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t position = 0;

  bool operator==(const RngState&) const = default;
};

// Seedable generator with platform-independent output. The engine is
// std::mt19937_64, whose raw sequence is fixed by the standard; every
// distribution is implemented here because the std:: distributions are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}
  explicit Rng(const RngState& state);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  bool bernoulli(double p);
  // Standard normal via Box-Muller; consumes two raw draws.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  RngState state() const { return {seed_, position_}; }

  // Independent generator for sub-stream `stream` (splitmix64 of seed and stream).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace permll
