#pragma once

#include <cstdint>
#include <random>

namespace gbwm {

// splitmix64 step; used for seed derivation so substreams are decorrelated
// regardless of how callers partition work.
uint64_t splitmix64(uint64_t& state);

// Seed of the substream identified by (seed, stream_id); what
// Rng::substream uses internally.
uint64_t derive_seed(uint64_t seed, uint64_t stream_id);

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard, and every mapping to doubles/ints below is explicit, so a given
// seed produces the same draws on any conforming implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  // Uniform integer in [0, n), unbiased via rejection. n must be > 0.
  uint64_t uniform_below(uint64_t n);

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal();

  // Gamma(shape, 1) for shape >= 1 (Marsaglia-Tsang squeeze).
  double gamma(double shape);

  // Beta(a, b) for a, b >= 1, as a ratio of gamma draws. Result is clamped
  // to the open interval so log-densities stay finite.
  double beta(double a, double b);

  // Substream with an independent state derived from (seed, stream_id).
  static Rng substream(uint64_t seed, uint64_t stream_id);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gbwm
