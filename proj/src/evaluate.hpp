#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dp.hpp"
#include "env.hpp"
#include "policy.hpp"
#include "ppo.hpp"
#include "strategies.hpp"
#include "trajectory.hpp"

namespace gbwm {

// How test trajectories are produced. Text forms:
//   "historical"                every overlapping window of the series
//   "simulated:36"              rolling-window Gaussian, 36-month window
//   "simulated:24,36,48"        window drawn per trajectory from the list
//   "bootstrap:1"               block bootstrap, 1-year blocks
//   "bootstrap:4,5,6"           block length drawn per trajectory (years)
struct EvalProtocol {
  enum class Kind { historical, simulated, bootstrap };
  Kind kind = Kind::historical;
  std::vector<int> params;  // window months (simulated) / block years (bootstrap)
  int count = 10000;        // trajectories; ignored for historical
  uint64_t seed = 0;

  static EvalProtocol parse(const std::string& text);
  std::string name() const;  // canonical text form (without count/seed)
};

// Trajectory i always comes from RNG substream (protocol seed, i), so the
// set is identical however the work is later split up.
std::vector<Trajectory> make_trajectories(const ReturnSeries& test,
                                          const EvalProtocol& protocol,
                                          int horizon, int workers = 1);

struct EvalResult {
  double success_rate = 0.0;
  size_t episodes = 0;
  std::vector<double> mean_alpha;   // [t] average action taken at month t
  std::vector<double> mean_wealth;  // [t] average wealth, t = 0..horizon
};

// Runs the policy over a fixed trajectory set (common random numbers: every
// strategy sees the same trajectories). Work is split into fixed-size index
// chunks reduced in order, so results are bit-identical for any worker count.
EvalResult run_protocol(const Policy& policy, const EnvConfig& env_config,
                        std::span<const Trajectory> trajectories,
                        int workers = 1);

struct SweepPoint {
  double param = 0.0;
  double success = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // in the order given
  double best_param = 0.0;         // ties go to the smaller parameter
  double best_success = -1.0;
};

// Evaluates make_policy(param) for every parameter on the same trajectories.
SweepResult sweep_parameter(
    const std::function<std::unique_ptr<Policy>(double)>& make_policy,
    std::span<const double> params, const EnvConfig& env_config,
    std::span<const Trajectory> trajectories, int workers = 1);

// Dispersion of moment estimates across every rolling window of `window`
// observations: one entry per admissible window end (count N - window + 1).
struct MomentsSpread {
  std::vector<MonthKey> end_months;
  std::vector<Moments> window_moments;
  double mu_stock_min = 0.0;
  double mu_stock_max = 0.0;
  double mu_stock_std = 0.0;  // sample std of the window stock means
};

MomentsSpread mean_estimate_spread(const ReturnSeries& series, int window);

// Success-rate table: strategies x protocols, trajectories shared per
// protocol. Strategies without their artifact (dp table / rl policy) are
// left out rather than faked.
struct TableSpec {
  std::vector<EvalProtocol> protocols;
  StrategyContext ctx;
  double merton_gamma = 0.0;
  double vb_budget = 0.0;
  const DpTable* dp = nullptr;        // optional
  const ActorCritic* rl = nullptr;    // optional
  EnvConfig env;
  int workers = 1;
};

// The paper-style benchmark set: historical, three simulated variants,
// three bootstrap variants.
std::vector<EvalProtocol> default_protocols(int count, uint64_t seed);

struct TableResult {
  std::vector<std::string> strategy_names;
  std::vector<std::string> protocol_names;
  std::vector<std::vector<double>> success;  // [strategy][protocol]
  std::vector<size_t> episode_counts;        // per protocol
};

TableResult build_table(const ReturnSeries& test, const TableSpec& spec);

void save_table_csv(const TableResult& table, const std::string& path,
                    const MetaList& meta);

}  // namespace gbwm
