#include "trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace gbwm {

std::array<std::array<double, 2>, 2> Moments::cholesky() const {
  const double jitter = 1e-12;
  double s00 = sigma[0][0];
  double s01 = sigma[0][1];
  double s11 = sigma[1][1];
  if (s00 < -jitter || s11 < -jitter) {
    throw std::runtime_error("covariance has negative diagonal");
  }
  std::array<std::array<double, 2>, 2> l{};
  l[0][0] = std::sqrt(std::max(s00, 0.0));
  if (l[0][0] > 0.0) {
    l[1][0] = s01 / l[0][0];
  } else {
    if (std::abs(s01) > jitter) {
      throw std::runtime_error("covariance not positive semidefinite");
    }
    l[1][0] = 0.0;
  }
  double rem = s11 - l[1][0] * l[1][0];
  if (rem < -jitter) {
    throw std::runtime_error("covariance not positive semidefinite");
  }
  l[1][1] = std::sqrt(std::max(rem, 0.0));
  return l;
}

Moments estimate_moments(const ReturnSeries& series, size_t begin,
                         size_t end) {
  if (end > series.size() || begin >= end) {
    throw std::runtime_error("moment window out of range");
  }
  size_t n = end - begin;
  if (n < 2) throw std::runtime_error("moment window too short (need >= 2)");

  Moments m;
  for (size_t i = begin; i < end; ++i) {
    m.mu[0] += series.bond[i];
    m.mu[1] += series.stock[i];
  }
  m.mu[0] /= static_cast<double>(n);
  m.mu[1] /= static_cast<double>(n);
  for (size_t i = begin; i < end; ++i) {
    double db = series.bond[i] - m.mu[0];
    double ds = series.stock[i] - m.mu[1];
    m.sigma[0][0] += db * db;
    m.sigma[0][1] += db * ds;
    m.sigma[1][1] += ds * ds;
  }
  double denom = static_cast<double>(n - 1);
  m.sigma[0][0] /= denom;
  m.sigma[0][1] /= denom;
  m.sigma[1][1] /= denom;
  m.sigma[1][0] = m.sigma[0][1];
  return m;
}

AssetReturn sample_mvn(const Moments& moments, Rng& rng) {
  auto l = moments.cholesky();
  double z0 = rng.normal();
  double z1 = rng.normal();
  double bond = moments.mu[0] + l[0][0] * z0;
  double stock = moments.mu[1] + l[1][0] * z0 + l[1][1] * z1;
  return {std::max(bond, kReturnFloor), std::max(stock, kReturnFloor)};
}

Trajectory simulate_trajectory(const ReturnSeries& series, int window,
                               int length, Rng& rng) {
  if (window < 2) throw std::runtime_error("window size must be >= 2");
  size_t n = static_cast<size_t>(window);
  if (series.size() <= n) {
    throw std::runtime_error("series too short for window size " +
                             std::to_string(window));
  }
  // end index k drawn from {n, ..., N-1} (0-based); the estimation window is
  // the inclusive range [k-n, k], i.e. window+1 observations.
  size_t k = n + rng.uniform_below(series.size() - n);
  Moments m = estimate_moments(series, k - n, k + 1);

  Trajectory t;
  t.provenance = Provenance::simulated;
  t.params = "window=" + std::to_string(window);
  t.returns.reserve(length);
  for (int i = 0; i < length; ++i) t.returns.push_back(sample_mvn(m, rng));
  return t;
}

Trajectory simulate_trajectory_mixed(const ReturnSeries& series,
                                     const std::vector<int>& windows,
                                     int length, Rng& rng) {
  if (windows.empty()) throw std::runtime_error("empty window-size set");
  // A singleton set consumes no draw, so it reduces exactly to the
  // fixed-window generator under the same stream.
  int w = windows.size() == 1 ? windows[0]
                              : windows[rng.uniform_below(windows.size())];
  return simulate_trajectory(series, w, length, rng);
}

Trajectory block_bootstrap_trajectory(const ReturnSeries& series,
                                      const std::vector<int>& blocks,
                                      int length, Rng& rng) {
  if (blocks.empty()) throw std::runtime_error("empty block-size set");
  if (length < 1) throw std::runtime_error("trajectory length must be >= 1");
  for (int b : blocks) {
    if (b < 1 || static_cast<size_t>(b) > series.size()) {
      throw std::runtime_error("block size " + std::to_string(b) +
                               " impossible for series of length " +
                               std::to_string(series.size()));
    }
  }
  Trajectory t;
  t.provenance = Provenance::bootstrap;
  t.params = "blocks=" + std::to_string(blocks.front());
  for (size_t i = 1; i < blocks.size(); ++i) {
    t.params += "," + std::to_string(blocks[i]);
  }
  t.returns.reserve(length);
  while (t.returns.size() < static_cast<size_t>(length)) {
    size_t b = static_cast<size_t>(blocks[rng.uniform_below(blocks.size())]);
    size_t start = rng.uniform_below(series.size() - b + 1);
    for (size_t j = 0; j < b && t.returns.size() < static_cast<size_t>(length);
         ++j) {
      t.returns.push_back({series.bond[start + j], series.stock[start + j]});
    }
  }
  return t;
}

std::vector<Trajectory> historical_windows(const ReturnSeries& series,
                                           int length) {
  if (series.size() < static_cast<size_t>(length)) {
    throw std::runtime_error("series shorter than requested window");
  }
  std::vector<Trajectory> out;
  size_t count = series.size() - static_cast<size_t>(length) + 1;
  out.reserve(count);
  for (size_t s = 0; s < count; ++s) {
    Trajectory t;
    t.provenance = Provenance::historical;
    t.params = "start=" + series.months[s].str();
    t.returns.reserve(length);
    for (int j = 0; j < length; ++j) {
      t.returns.push_back({series.bond[s + j], series.stock[s + j]});
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace gbwm
