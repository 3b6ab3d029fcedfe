#include "policy.hpp"

namespace gbwm {

namespace {

class GlidePathPolicy final : public Policy {
 public:
  explicit GlidePathPolicy(int horizon) : horizon_(horizon) {}
  double act(const EnvState& state, std::span<const AssetReturn>) const override {
    return glide_path_action(state.t, horizon_);
  }

 private:
  int horizon_;
};

class MertonPolicy final : public Policy {
 public:
  MertonPolicy(const StrategyContext& ctx, double gamma)
      : alpha_(merton_action(ctx, gamma)) {}
  double act(const EnvState&, std::span<const AssetReturn>) const override {
    return alpha_;
  }

 private:
  double alpha_;
};

class VarianceBudgetPolicy final : public Policy {
 public:
  VarianceBudgetPolicy(const StrategyContext& ctx, double budget)
      : ctx_(ctx), budget_(budget) {}
  double act(const EnvState& state,
             std::span<const AssetReturn> past) const override {
    const double vol = running_stock_vol(past, ctx_.sigma_stock);
    return variance_budget_action(ctx_, budget_, state.wealth, vol);
  }

 private:
  StrategyContext ctx_;
  double budget_;
};

class DpPolicy final : public Policy {
 public:
  explicit DpPolicy(const DpTable& table) : table_(table) {}
  double act(const EnvState& state, std::span<const AssetReturn>) const override {
    return dp_policy_action(table_, state.t, state.wealth);
  }

 private:
  DpTable table_;
};

class RlPolicy final : public Policy {
 public:
  explicit RlPolicy(const ActorCritic& ac) : ac_(ac) {}
  double act(const EnvState& state, std::span<const AssetReturn>) const override {
    return ac_.mode_action(state.obs);
  }

 private:
  ActorCritic ac_;
};

}  // namespace

std::unique_ptr<Policy> make_glide_path(int horizon) {
  return std::make_unique<GlidePathPolicy>(horizon);
}

std::unique_ptr<Policy> make_merton(const StrategyContext& ctx, double gamma) {
  return std::make_unique<MertonPolicy>(ctx, gamma);
}

std::unique_ptr<Policy> make_variance_budget(const StrategyContext& ctx,
                                             double budget) {
  return std::make_unique<VarianceBudgetPolicy>(ctx, budget);
}

std::unique_ptr<Policy> make_dp(const DpTable& table) {
  return std::make_unique<DpPolicy>(table);
}

std::unique_ptr<Policy> make_rl(const ActorCritic& ac) {
  return std::make_unique<RlPolicy>(ac);
}

}  // namespace gbwm
