#include "rng.hpp"

#include <cmath>

namespace gbwm {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(uint64_t seed) : gen_(seed) {}

uint64_t derive_seed(uint64_t seed, uint64_t stream_id) {
  uint64_t state = seed ^ 0x5851f42d4c957f2dULL;
  splitmix64(state);
  state ^= stream_id;
  return splitmix64(state);
}

Rng Rng::substream(uint64_t seed, uint64_t stream_id) {
  return Rng(derive_seed(seed, stream_id));
}

uint64_t Rng::next_u64() { return gen_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::uniform_below(uint64_t n) {
  // rejection from the top of the range keeps the draw unbiased
  uint64_t threshold = (0ULL - n) % n;
  for (;;) {
    uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::gamma(double shape) {
  // Marsaglia & Tsang (2000), valid for shape >= 1
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

double Rng::beta(double a, double b) {
  double x = gamma(a);
  double y = gamma(b);
  double r = x / (x + y);
  const double eps = 1e-12;
  if (r < eps) r = eps;
  if (r > 1.0 - eps) r = 1.0 - eps;
  return r;
}

}  // namespace gbwm
