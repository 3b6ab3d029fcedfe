#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "env.hpp"
#include "io.hpp"
#include "market_data.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace gbwm {

struct PpoConfig {
  std::vector<size_t> actor_sizes{2, 6, 6, 2};
  std::vector<size_t> critic_sizes{2, 6, 6, 1};

  double lr = 1e-4;
  int epochs = 10;                 // passes over each batch
  size_t minibatch_size = 256;
  int episodes_per_batch = 32;
  long total_episodes = 200000;

  double clip_epsilon = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double discount = 1.0;           // gamma
  double gae_lambda = 0.95;
  double kl_limit = 0.05;          // stop epochs once approx KL passes this

  int window = 120;                // rolling window for generated trajectories
  int eval_every_batches = 50;     // checkpoint-selection cadence
  int eval_episodes = 2000;        // held-out deterministic eval set size

  uint64_t seed = 1;
  EnvConfig env;

  void validate() const;
};

// Beta(a, b) over (0, 1) with a, b = 1 + 1e-6 + softplus(raw), which keeps
// both shape parameters above 1 so the density has a unique interior mode.
struct BetaParams {
  double a = 0.0, b = 0.0;
  double raw_a = 0.0, raw_b = 0.0;  // pre-softplus head outputs
};

BetaParams beta_from_raw(double raw_a, double raw_b);
double beta_log_pdf(const BetaParams& p, double x);
double beta_mode(const BetaParams& p);
double beta_entropy(const BetaParams& p);
// d(log pdf)/da and /db at fixed x.
std::array<double, 2> beta_log_pdf_grad(const BetaParams& p, double x);
// dH/da and dH/db.
std::array<double, 2> beta_entropy_grad(const BetaParams& p);

// Separate actor and critic trunks; the actor's two linear outputs are the
// raw Beta shape parameters, the critic's single output is V(s).
struct ActorCritic {
  Mlp actor;
  Mlp critic;

  ActorCritic(std::vector<size_t> actor_sizes, std::vector<size_t> critic_sizes);
  static ActorCritic init(const PpoConfig& config, Rng& rng);

  BetaParams policy(std::span<const double> obs, Mlp::Cache* cache = nullptr) const;
  double value(std::span<const double> obs, Mlp::Cache* cache = nullptr) const;

  // Draws an action from the Beta policy; optionally reports its log-density.
  double sample_action(std::span<const double> obs, Rng& rng,
                       double* logp = nullptr) const;
  // Deterministic action: the density mode.
  double mode_action(std::span<const double> obs) const;
};

struct Transition {
  std::array<double, 2> obs{};
  double action = 0.0;   // sampled stock weight in (0, 1)
  double old_logp = 0.0; // log-density at collection time
  double value = 0.0;    // V(obs) at collection time
  double reward = 0.0;
  bool terminal = false; // last step of its episode
  double advantage = 0.0;
  double ret = 0.0;      // value regression target
};

// Runs `episodes` episodes on freshly generated trajectories, recording one
// Transition per step. Trajectory i of the run uses its own RNG substream,
// starting at stream id `first_stream`.
std::vector<Transition> collect_rollouts(const ActorCritic& ac,
                                         const ReturnSeries& train,
                                         const PpoConfig& config,
                                         int episodes, uint64_t first_stream,
                                         Rng& action_rng);

// Generalized advantage estimation over episode boundaries (terminal flags);
// fills `advantage` and `ret` in place.
void compute_gae(std::span<Transition> batch, double discount, double lambda);

// In-place standardization of advantages (mean 0, std 1, eps 1e-8).
void normalize_advantages(std::span<Transition> batch);

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

// Average clipped-surrogate loss over `batch`; accumulates parameter
// gradients when the grad vectors are non-null (they must be pre-sized and
// are not zeroed here).
LossStats ppo_minibatch_loss(const ActorCritic& ac,
                             std::span<const Transition> batch,
                             const PpoConfig& config,
                             std::vector<double>* actor_grads,
                             std::vector<double>* critic_grads);

// Mean of (r - 1) - ln r over the batch; non-negative, zero iff all ratios
// are exactly 1.
double approx_kl(const ActorCritic& ac, std::span<const Transition> batch);

struct UpdateStats {
  LossStats loss;        // averages over the minibatches actually run
  double kl = 0.0;       // final approx KL over the whole batch
  int epochs_used = 0;
};

// One PPO update over a collected batch: GAE, normalization, then up to
// `epochs` shuffled minibatch passes with Adam, stopping early on KL.
UpdateStats ppo_update(ActorCritic& ac, std::vector<Transition>& batch,
                       const PpoConfig& config, AdamState& actor_adam,
                       AdamState& critic_adam, Rng& shuffle_rng);

struct EvalPoint {
  long episodes_seen = 0;
  double success_rate = 0.0;
  // Averages over the updates since the previous evaluation (zero at the
  // initial point, before any update has run).
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
};

struct TrainResult {
  std::vector<EvalPoint> curve;
  double best_success = -1.0;
  long best_at_episodes = 0;
  long episodes_run = 0;
};

// Full training loop. On return `ac` holds the parameters of the checkpoint
// with the best held-out deterministic success rate (ties keep the earlier
// one). `progress`, when set, is called after every evaluation.
TrainResult ppo_train(ActorCritic& ac, const ReturnSeries& train,
                      const PpoConfig& config,
                      const std::function<void(const EvalPoint&)>& progress = {});

// Deterministic (mode-action) success rate over a fixed trajectory set.
double evaluate_policy(const ActorCritic& ac, const EnvConfig& env_config,
                       std::span<const Trajectory> trajectories);

// JSON checkpoint round-trip. Doubles survive exactly.
void save_policy(const ActorCritic& ac, const std::string& path,
                 const MetaList& meta);
ActorCritic load_policy(const std::string& path, MetaList* meta = nullptr);

// Mode actions on a (t/T, W/W_G) lattice, written as CSV rows
// (t_frac, wealth_ratio, alpha).
void export_policy_grid(const ActorCritic& ac, const std::string& path,
                        size_t t_steps, size_t w_steps, double w_max,
                        const MetaList& meta);

}  // namespace gbwm
