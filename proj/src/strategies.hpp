#pragma once

#include <span>

#include "market_data.hpp"
#include "trajectory.hpp"

namespace gbwm {

// Market parameters the closed-form strategies need, estimated once from the
// training series and then held fixed.
struct StrategyContext {
  double mu_stock = 0.0;       // mean monthly stock return
  double mu_bond = 0.0;        // mean monthly bond return
  double sigma_stock = 0.0;    // monthly stock return std
  double riskless_rate = 0.0;  // proxy: mean monthly bond return
  int horizon = 120;           // episode length in months
  double goal_wealth = 1.0;

  static StrategyContext from_series(const ReturnSeries& series, int horizon,
                                     double goal_wealth);
};

// Deterministic glide path: stock weight 1 - t/T, independent of wealth.
double glide_path_action(int t, int horizon);

// Constant Merton weight (mu - r) / ((1 - gamma) * sigma^2), clamped to
// [0, 1]. gamma is the power-utility curvature, gamma < 1 required.
double merton_action(const StrategyContext& ctx, double gamma);

// Sample std of the stock returns seen so far this episode; falls back to
// the training-series std until 12 observations are available, and never
// returns less than `floor`.
double running_stock_vol(std::span<const AssetReturn> history,
                         double fallback, double floor = 1e-6);

// Variance-budgeting weight: the per-episode risk budget v is spread over
// the horizon, so the target stock weight solves
//   alpha = v / (sigma_t^2 * sqrt(T) * X_t),
// clamped to [0, 1], with sigma_t the running monthly stock vol, T the
// horizon in months and X_t the current wealth in goal units. High wealth
// or high vol both cut the weight.
double variance_budget_action(const StrategyContext& ctx, double budget,
                              double wealth, double running_vol);

}  // namespace gbwm
