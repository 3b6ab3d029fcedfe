#pragma once

#include <array>
#include <span>

#include "trajectory.hpp"

namespace gbwm {

struct EnvConfig {
  int horizon = 120;                  // steps per episode
  double goal_wealth = 1.0;
  double initial_wealth_ratio = 0.6;  // W_0 as a fraction of the goal

  void validate() const;
};

struct EnvState {
  int t = 0;
  double wealth = 0.0;
  // Normalized observation (t/T, W/W_G); the only inputs policies see.
  std::array<double, 2> obs{};
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

// Episodic goal-attainment environment: wealth moves through a fixed return
// trajectory under the chosen stock fraction; the only reward is the
// terminal indicator of reaching the goal. One instance per worker.
class GbwmEnv {
 public:
  explicit GbwmEnv(const EnvConfig& config);

  // Binds a trajectory (must have exactly `horizon` rows) and returns s_0.
  // The env keeps a pointer, so the trajectory must outlive the episode;
  // the deleted overload stops temporaries from slipping through.
  EnvState reset(const Trajectory& trajectory);
  EnvState reset(Trajectory&&) = delete;

  // Applies stock fraction `alpha` (clamped to [0,1]) for one month:
  // W_{t+1} = W_t * (1 + a*R_stock + (1-a)*R_bond). Reward is 0 until the
  // final step, then 1 iff W_T >= goal. Throws if the episode is over.
  StepResult step(double alpha);

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }

  // Returns observed so far this episode (no lookahead).
  std::span<const AssetReturn> history() const;

 private:
  EnvConfig config_;
  const Trajectory* trajectory_ = nullptr;
  EnvState state_;
  bool done_ = true;
};

}  // namespace gbwm
