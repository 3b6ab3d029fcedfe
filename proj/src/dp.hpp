#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "io.hpp"
#include "trajectory.hpp"

namespace gbwm {

// Log-uniform wealth grid. Lookups happen in log space so relative (not
// absolute) distance decides the nearest node.
struct WealthGrid {
  std::vector<double> nodes;      // ascending wealth levels
  std::vector<double> log_nodes;  // ln(nodes), cached

  static WealthGrid log_uniform(double lo, double hi, size_t count);
  size_t nearest(double wealth) const;
};

// One admissible portfolio: a stock weight and the lognormal step it induces.
struct PortfolioCandidate {
  double alpha = 0.0;
  double log_mean = 0.0;  // mean of ln(W_{t+1}/W_t)
  double log_std = 0.0;   // std of ln(W_{t+1}/W_t)
};

// Maps each alpha on a uniform grid to geometric-Brownian step parameters:
// with per-step arithmetic mean mu_p and std sigma_p, the log step has
// sigma_tilde = sigma_p / (1 + mu_p) and mean ln(1 + mu_p) - sigma_tilde^2/2.
std::vector<PortfolioCandidate> portfolio_candidates(const Moments& moments,
                                                     size_t alpha_count = 21);

struct DpConfig {
  int horizon = 120;
  double goal_wealth = 1.0;
  double initial_wealth = 0.6;
  size_t grid_size = 300;
  size_t alpha_count = 21;
};

// Solved table: for every decision epoch t in [0, T) and grid node, the
// optimal stock weight and the success probability from that state.
struct DpTable {
  DpConfig config;
  WealthGrid grid;
  std::vector<double> policy;  // [t * grid_size + node] -> alpha
  std::vector<double> value;   // [t * grid_size + node] -> P(success)

  double policy_at(int t, size_t node) const;
  double value_at(int t, size_t node) const;
};

// Grid bounds wide enough that neither drift nor four sigmas of diffusion
// from any candidate escapes them, and bracketing both W_0 and the goal.
WealthGrid build_grid(const std::vector<PortfolioCandidate>& candidates,
                      const DpConfig& config);

// Row-stochastic matrix P[i*n + j] = P(node j next | node i now) under the
// candidate's lognormal step: each node absorbs the step's probability mass
// over its log-space cell (midpoint boundaries, unbounded end cells), so
// rows sum to 1 exactly at any node spacing.
std::vector<double> transition_probs(const WealthGrid& grid,
                                     const PortfolioCandidate& candidate);

// Backward induction over the terminal indicator. Ties go to the smallest
// stock weight (candidates scanned in ascending alpha, strictly-better
// replacement).
DpTable dp_solve(const Moments& moments, const DpConfig& config);

// Policy lookup for arbitrary wealth: nearest grid node in log space.
double dp_policy_action(const DpTable& table, int t, double wealth);

void save_dp_table(const DpTable& table, const std::string& path,
                   const MetaList& meta);
DpTable load_dp_table(const std::string& path);

}  // namespace gbwm
