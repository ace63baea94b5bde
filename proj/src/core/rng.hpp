#ifndef WDDP_CORE_RNG_HPP
#define WDDP_CORE_RNG_HPP

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace wddp {

// Mixes two seeds into a new one (SplitMix64 finalizer chain). Used to derive
// per-cell and per-client stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Seedable, splittable generator. Splitting derives a child stream from the
// construction seed and a stream id only, so child streams do not depend on
// how many values the parent has drawn. All derived quantities (uniform ints,
// normals, shuffles) are produced by our own reductions over mt19937_64
// output, which keeps byte-identical runs across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent child stream identified by `stream`.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  // N(0, sigma^2) via Box-Muller, one variate per call.
  double normal(double sigma = 1.0);

  // Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo
  // bias.
  std::uint64_t below(std::uint64_t bound);

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace wddp

#endif  // WDDP_CORE_RNG_HPP
