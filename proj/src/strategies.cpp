#include "strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gbwm {

StrategyContext StrategyContext::from_series(const ReturnSeries& series,
                                             int horizon,
                                             double goal_wealth) {
  const Moments m = estimate_moments(series, 0, series.size());
  StrategyContext ctx;
  ctx.mu_bond = m.mu[0];
  ctx.mu_stock = m.mu[1];
  ctx.sigma_stock = std::sqrt(m.sigma[1][1]);
  ctx.riskless_rate = m.mu[0];
  ctx.horizon = horizon;
  ctx.goal_wealth = goal_wealth;
  return ctx;
}

double glide_path_action(int t, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (t < 0 || t > horizon) throw std::invalid_argument("t out of range");
  return 1.0 - static_cast<double>(t) / horizon;
}

double merton_action(const StrategyContext& ctx, double gamma) {
  if (gamma >= 1.0) throw std::invalid_argument("gamma must be < 1");
  const double var = ctx.sigma_stock * ctx.sigma_stock;
  if (var <= 0.0) throw std::invalid_argument("stock variance must be > 0");
  const double raw = (ctx.mu_stock - ctx.riskless_rate) / ((1.0 - gamma) * var);
  return std::clamp(raw, 0.0, 1.0);
}

double running_stock_vol(std::span<const AssetReturn> history,
                         double fallback, double floor) {
  const size_t n = history.size();
  if (n < 12) return std::max(fallback, floor);
  double mean = 0.0;
  for (const AssetReturn& r : history) mean += r.stock;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const AssetReturn& r : history) {
    const double d = r.stock - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  return std::max(std::sqrt(var), floor);
}

double variance_budget_action(const StrategyContext& ctx, double budget,
                              double wealth, double running_vol) {
  if (budget < 0.0) throw std::invalid_argument("budget must be >= 0");
  if (wealth <= 0.0) throw std::invalid_argument("wealth must be > 0");
  if (budget == 0.0) return 0.0;  // no risk budget: all bonds
  const double vol = std::max(running_vol, 1e-6);
  const double x = wealth / ctx.goal_wealth;
  const double raw =
      budget / (vol * vol * std::sqrt(static_cast<double>(ctx.horizon)) * x);
  return std::clamp(raw, 0.0, 1.0);
}

}  // namespace gbwm
