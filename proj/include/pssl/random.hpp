#ifndef PSSL_RANDOM_HPP
#define PSSL_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <random>

namespace pssl {

// Seeded random source. The engine (mt19937_64) has a standardized output
// sequence; the distributions below are written out by hand because the
// standard library's distributions are implementation-defined and every
// artifact must reproduce bit-for-bit across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal (Box-Muller, second variate cached).
  double gaussian();

  // Independent child stream, e.g. one per subsystem of a run.
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pssl

#endif  // PSSL_RANDOM_HPP
