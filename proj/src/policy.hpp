#pragma once

#include <memory>
#include <span>

#include "dp.hpp"
#include "env.hpp"
#include "ppo.hpp"
#include "strategies.hpp"

namespace gbwm {

// One allocation rule under a common interface: given the current state and
// the returns observed so far this episode, produce a stock weight. act() is
// const so one policy instance can serve parallel evaluation workers.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual double act(const EnvState& state,
                     std::span<const AssetReturn> past) const = 0;
};

std::unique_ptr<Policy> make_glide_path(int horizon);
std::unique_ptr<Policy> make_merton(const StrategyContext& ctx, double gamma);
std::unique_ptr<Policy> make_variance_budget(const StrategyContext& ctx,
                                             double budget);
// The table/network are copied in, so the policy outlives its inputs.
std::unique_ptr<Policy> make_dp(const DpTable& table);
std::unique_ptr<Policy> make_rl(const ActorCritic& ac);

}  // namespace gbwm
