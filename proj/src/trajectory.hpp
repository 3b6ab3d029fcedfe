#pragma once

#include <array>
#include <string>
#include <vector>

#include "market_data.hpp"
#include "rng.hpp"

namespace gbwm {

// Sampled Gaussian returns are floored here so wealth can never be wiped
// out past -100%, where simple-return compounding stops making sense.
inline constexpr double kReturnFloor = -0.99;

// Mean vector and covariance of (bond, stock) monthly returns.
struct Moments {
  std::array<double, 2> mu{};           // [bond, stock]
  std::array<std::array<double, 2>, 2> sigma{};

  // Lower Cholesky factor, tolerating tiny negative pivots (jitter 1e-12).
  // Throws if sigma is indefinite beyond that tolerance.
  std::array<std::array<double, 2>, 2> cholesky() const;
};

// Sample mean / covariance (n-1 denominator) of rows [begin, end).
Moments estimate_moments(const ReturnSeries& series, size_t begin, size_t end);

struct AssetReturn {
  double bond = 0.0;
  double stock = 0.0;
};

enum class Provenance { simulated, bootstrap, historical };

struct Trajectory {
  std::vector<AssetReturn> returns;
  Provenance provenance = Provenance::simulated;
  std::string params;  // generation parameters, for report metadata
};

// One draw from N(mu, sigma) via the Cholesky factor, floored per asset.
AssetReturn sample_mvn(const Moments& moments, Rng& rng);

// Rolling-window Gaussian generator: pick an end index at random, fit
// moments on the window of returns ending there (window+1 observations,
// inclusive range), then draw `length` i.i.d. samples from the fit.
Trajectory simulate_trajectory(const ReturnSeries& series, int window,
                               int length, Rng& rng);

// Same, with the window size drawn uniformly from `windows` per trajectory.
Trajectory simulate_trajectory_mixed(const ReturnSeries& series,
                                     const std::vector<int>& windows,
                                     int length, Rng& rng);

// Block bootstrap: repeatedly pick a block size from `blocks` and a uniform
// start with room for the block, appending whole rows (both assets jointly)
// until `length` rows exist. Blocks may overlap; no wrap-around.
Trajectory block_bootstrap_trajectory(const ReturnSeries& series,
                                      const std::vector<int>& blocks,
                                      int length, Rng& rng);

// All contiguous windows of `length` rows, in order; count = N - length + 1.
std::vector<Trajectory> historical_windows(const ReturnSeries& series,
                                           int length);

}  // namespace gbwm
