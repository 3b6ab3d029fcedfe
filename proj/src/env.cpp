#include "env.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gbwm {

void EnvConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (goal_wealth <= 0.0) throw std::invalid_argument("goal_wealth must be > 0");
  if (initial_wealth_ratio <= 0.0) {
    throw std::invalid_argument("initial_wealth_ratio must be > 0");
  }
}

GbwmEnv::GbwmEnv(const EnvConfig& config) : config_(config) {
  config_.validate();
}

EnvState GbwmEnv::reset(const Trajectory& trajectory) {
  if (static_cast<int>(trajectory.returns.size()) != config_.horizon) {
    throw std::invalid_argument(
        "trajectory length " + std::to_string(trajectory.returns.size()) +
        " does not match horizon " + std::to_string(config_.horizon));
  }
  trajectory_ = &trajectory;
  state_.t = 0;
  state_.wealth = config_.initial_wealth_ratio * config_.goal_wealth;
  state_.obs = {0.0, state_.wealth / config_.goal_wealth};
  done_ = false;
  return state_;
}

StepResult GbwmEnv::step(double alpha) {
  if (done_) throw std::logic_error("step() called on a finished episode");
  const double a = std::clamp(alpha, 0.0, 1.0);
  const AssetReturn& r = trajectory_->returns[static_cast<size_t>(state_.t)];
  state_.wealth *= 1.0 + a * r.stock + (1.0 - a) * r.bond;
  state_.t += 1;
  state_.obs = {static_cast<double>(state_.t) / config_.horizon,
                state_.wealth / config_.goal_wealth};

  StepResult result;
  if (state_.t == config_.horizon) {
    done_ = true;
    result.reward = state_.wealth >= config_.goal_wealth ? 1.0 : 0.0;
    result.done = true;
  }
  result.state = state_;
  return result;
}

std::span<const AssetReturn> GbwmEnv::history() const {
  if (trajectory_ == nullptr) return {};
  return std::span<const AssetReturn>(trajectory_->returns.data(),
                                      static_cast<size_t>(state_.t));
}

}  // namespace gbwm
