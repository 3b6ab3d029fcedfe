#include "ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "mathx.hpp"
#include "trajectory.hpp"

namespace gbwm {

// RNG stream ids derived from the training seed:
//   0            parameter init (used by ActorCritic::init callers)
//   1            update loop (action sampling, minibatch shuffles)
//   2 + e        trajectory of training episode e
//   2^40 + i     trajectory i of the held-out eval set
static constexpr uint64_t kUpdateStream = 1;
static constexpr uint64_t kTrainTrajBase = 2;
static constexpr uint64_t kEvalTrajBase = 1ull << 40;

void PpoConfig::validate() const {
  if (actor_sizes.size() < 2 || critic_sizes.size() < 2) {
    throw std::invalid_argument("network needs at least input and output layers");
  }
  if (actor_sizes.front() != 2 || critic_sizes.front() != 2) {
    throw std::invalid_argument("networks take the 2-component observation");
  }
  if (actor_sizes.back() != 2) {
    throw std::invalid_argument("actor must output the 2 Beta shape heads");
  }
  if (critic_sizes.back() != 1) {
    throw std::invalid_argument("critic must output a single value");
  }
  if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (minibatch_size < 1) throw std::invalid_argument("minibatch_size must be >= 1");
  if (episodes_per_batch < 1) {
    throw std::invalid_argument("episodes_per_batch must be >= 1");
  }
  if (total_episodes < 1) throw std::invalid_argument("total_episodes must be >= 1");
  if (clip_epsilon <= 0.0) throw std::invalid_argument("clip_epsilon must be > 0");
  if (discount < 0.0 || discount > 1.0) {
    throw std::invalid_argument("discount must be in [0, 1]");
  }
  if (gae_lambda < 0.0 || gae_lambda > 1.0) {
    throw std::invalid_argument("gae_lambda must be in [0, 1]");
  }
  if (window < 2) throw std::invalid_argument("window must be >= 2");
  if (eval_every_batches < 1) {
    throw std::invalid_argument("eval_every_batches must be >= 1");
  }
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  env.validate();
}

BetaParams beta_from_raw(double raw_a, double raw_b) {
  BetaParams p;
  p.raw_a = raw_a;
  p.raw_b = raw_b;
  p.a = 1.0 + 1e-6 + softplus(raw_a);
  p.b = 1.0 + 1e-6 + softplus(raw_b);
  return p;
}

double beta_log_pdf(const BetaParams& p, double x) {
  if (x <= 0.0 || x >= 1.0) throw std::invalid_argument("x must be in (0, 1)");
  return (p.a - 1.0) * std::log(x) + (p.b - 1.0) * std::log1p(-x) -
         log_beta(p.a, p.b);
}

double beta_mode(const BetaParams& p) {
  // a, b > 1 by construction, so the mode is interior and unique.
  return (p.a - 1.0) / (p.a + p.b - 2.0);
}

double beta_entropy(const BetaParams& p) {
  return log_beta(p.a, p.b) - (p.a - 1.0) * digamma(p.a) -
         (p.b - 1.0) * digamma(p.b) + (p.a + p.b - 2.0) * digamma(p.a + p.b);
}

std::array<double, 2> beta_log_pdf_grad(const BetaParams& p, double x) {
  const double common = digamma(p.a + p.b);
  return {std::log(x) - digamma(p.a) + common,
          std::log1p(-x) - digamma(p.b) + common};
}

std::array<double, 2> beta_entropy_grad(const BetaParams& p) {
  const double cross = (p.a + p.b - 2.0) * trigamma(p.a + p.b);
  return {cross - (p.a - 1.0) * trigamma(p.a),
          cross - (p.b - 1.0) * trigamma(p.b)};
}

ActorCritic::ActorCritic(std::vector<size_t> actor_sizes,
                         std::vector<size_t> critic_sizes)
    : actor(std::move(actor_sizes)), critic(std::move(critic_sizes)) {}

ActorCritic ActorCritic::init(const PpoConfig& config, Rng& rng) {
  config.validate();
  ActorCritic ac(config.actor_sizes, config.critic_sizes);
  ac.actor.init_glorot(rng);
  ac.critic.init_glorot(rng);
  return ac;
}

BetaParams ActorCritic::policy(std::span<const double> obs,
                               Mlp::Cache* cache) const {
  const std::vector<double> raw = actor.forward(obs, cache);
  return beta_from_raw(raw[0], raw[1]);
}

double ActorCritic::value(std::span<const double> obs,
                          Mlp::Cache* cache) const {
  return critic.forward(obs, cache)[0];
}

double ActorCritic::sample_action(std::span<const double> obs, Rng& rng,
                                  double* logp) const {
  const BetaParams p = policy(obs);
  const double x = rng.beta(p.a, p.b);
  if (logp != nullptr) *logp = beta_log_pdf(p, x);
  return x;
}

double ActorCritic::mode_action(std::span<const double> obs) const {
  return beta_mode(policy(obs));
}

std::vector<Transition> collect_rollouts(const ActorCritic& ac,
                                         const ReturnSeries& train,
                                         const PpoConfig& config,
                                         int episodes, uint64_t first_stream,
                                         Rng& action_rng) {
  GbwmEnv env(config.env);
  std::vector<Transition> batch;
  batch.reserve(static_cast<size_t>(episodes) * config.env.horizon);
  for (int e = 0; e < episodes; ++e) {
    Rng traj_rng = Rng::substream(config.seed, first_stream + static_cast<uint64_t>(e));
    const Trajectory traj =
        simulate_trajectory(train, config.window, config.env.horizon, traj_rng);
    EnvState state = env.reset(traj);
    for (int t = 0; t < config.env.horizon; ++t) {
      Transition tr;
      tr.obs = state.obs;
      tr.value = ac.value(state.obs);
      tr.action = ac.sample_action(state.obs, action_rng, &tr.old_logp);
      const StepResult sr = env.step(tr.action);
      tr.reward = sr.reward;
      tr.terminal = sr.done;
      batch.push_back(tr);
      state = sr.state;
    }
  }
  return batch;
}

void compute_gae(std::span<Transition> batch, double discount, double lambda) {
  double carry = 0.0;
  for (size_t i = batch.size(); i-- > 0;) {
    Transition& tr = batch[i];
    if (tr.terminal) {
      carry = tr.reward - tr.value;
    } else {
      const double next_value = batch[i + 1].value;
      const double delta = tr.reward + discount * next_value - tr.value;
      carry = delta + discount * lambda * carry;
    }
    tr.advantage = carry;
    tr.ret = tr.advantage + tr.value;
  }
}

void normalize_advantages(std::span<Transition> batch) {
  if (batch.empty()) return;
  double mean = 0.0;
  for (const Transition& tr : batch) mean += tr.advantage;
  mean /= static_cast<double>(batch.size());
  double ss = 0.0;
  for (const Transition& tr : batch) {
    const double d = tr.advantage - mean;
    ss += d * d;
  }
  const double denom = batch.size() > 1 ? static_cast<double>(batch.size() - 1) : 1.0;
  const double std = std::sqrt(ss / denom);
  for (Transition& tr : batch) {
    tr.advantage = (tr.advantage - mean) / (std + 1e-8);
  }
}

LossStats ppo_minibatch_loss(const ActorCritic& ac,
                             std::span<const Transition> batch,
                             const PpoConfig& config,
                             std::vector<double>* actor_grads,
                             std::vector<double>* critic_grads) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  LossStats stats;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  size_t clipped = 0;
  Mlp::Cache actor_cache, critic_cache;
  for (const Transition& tr : batch) {
    const std::vector<double> raw = ac.actor.forward(tr.obs, &actor_cache);
    const BetaParams p = beta_from_raw(raw[0], raw[1]);
    const double logp = beta_log_pdf(p, tr.action);
    const double ratio = std::exp(logp - tr.old_logp);
    const double clipped_ratio =
        std::clamp(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
    const double surr1 = ratio * tr.advantage;
    const double surr2 = clipped_ratio * tr.advantage;
    const double policy_loss = -std::min(surr1, surr2);
    if (std::fabs(ratio - 1.0) > config.clip_epsilon) ++clipped;

    const double entropy = beta_entropy(p);

    const double v = ac.critic.forward(tr.obs, &critic_cache)[0];
    const double verr = v - tr.ret;
    const double value_loss = verr * verr;

    stats.policy += policy_loss * inv_n;
    stats.value += value_loss * inv_n;
    stats.entropy += entropy * inv_n;

    if (actor_grads != nullptr) {
      // d(policy_loss)/d(logp) = -ratio*A on the unclipped branch, 0 when
      // the clip is binding (the clipped ratio is locally constant there).
      const double dloss_dlogp = surr1 <= surr2 ? -surr1 : 0.0;
      const std::array<double, 2> dlogp = beta_log_pdf_grad(p, tr.action);
      const std::array<double, 2> dent = beta_entropy_grad(p);
      // Chain through a = 1 + 1e-6 + softplus(raw): da/draw = sigmoid(raw).
      std::array<double, 2> grad_raw{};
      for (int k = 0; k < 2; ++k) {
        const double dloss_dshape =
            dloss_dlogp * dlogp[static_cast<size_t>(k)] -
            config.entropy_coef * dent[static_cast<size_t>(k)];
        grad_raw[static_cast<size_t>(k)] =
            dloss_dshape * sigmoid(k == 0 ? p.raw_a : p.raw_b) * inv_n;
      }
      ac.actor.backward(actor_cache, grad_raw, *actor_grads);
    }
    if (critic_grads != nullptr) {
      const std::array<double, 1> grad_v{config.value_coef * 2.0 * verr * inv_n};
      ac.critic.backward(critic_cache, grad_v, *critic_grads);
    }
  }
  stats.clip_fraction = static_cast<double>(clipped) * inv_n;
  stats.total = stats.policy + config.value_coef * stats.value -
                config.entropy_coef * stats.entropy;
  if (!std::isfinite(stats.total)) {
    throw std::runtime_error("non-finite PPO loss");
  }
  return stats;
}

double approx_kl(const ActorCritic& ac, std::span<const Transition> batch) {
  double acc = 0.0;
  for (const Transition& tr : batch) {
    const BetaParams p = ac.policy(tr.obs);
    const double log_ratio = beta_log_pdf(p, tr.action) - tr.old_logp;
    acc += std::expm1(log_ratio) - log_ratio;  // (r - 1) - ln r
  }
  return acc / static_cast<double>(batch.size());
}

UpdateStats ppo_update(ActorCritic& ac, std::vector<Transition>& batch,
                       const PpoConfig& config, AdamState& actor_adam,
                       AdamState& critic_adam, Rng& shuffle_rng) {
  compute_gae(batch, config.discount, config.gae_lambda);
  normalize_advantages(batch);

  std::vector<size_t> order(batch.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<Transition> minibatch;
  std::vector<double> actor_grads(ac.actor.param_count());
  std::vector<double> critic_grads(ac.critic.param_count());
  AdamConfig adam{.lr = config.lr};

  UpdateStats stats;
  double weight_total = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the training RNG keeps runs reproducible.
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(shuffle_rng.uniform_below(i));
      std::swap(order[i - 1], order[j]);
    }
    for (size_t start = 0; start < order.size(); start += config.minibatch_size) {
      const size_t stop = std::min(start + config.minibatch_size, order.size());
      minibatch.clear();
      for (size_t i = start; i < stop; ++i) minibatch.push_back(batch[order[i]]);
      std::fill(actor_grads.begin(), actor_grads.end(), 0.0);
      std::fill(critic_grads.begin(), critic_grads.end(), 0.0);
      const LossStats loss = ppo_minibatch_loss(ac, minibatch, config,
                                                &actor_grads, &critic_grads);
      adam_step(ac.actor.params(), actor_grads, actor_adam, adam);
      adam_step(ac.critic.params(), critic_grads, critic_adam, adam);

      const double w = static_cast<double>(minibatch.size());
      stats.loss.total += loss.total * w;
      stats.loss.policy += loss.policy * w;
      stats.loss.value += loss.value * w;
      stats.loss.entropy += loss.entropy * w;
      stats.loss.clip_fraction += loss.clip_fraction * w;
      weight_total += w;
    }
    stats.epochs_used = epoch + 1;
    stats.kl = approx_kl(ac, batch);
    if (stats.kl > config.kl_limit) break;
  }
  if (weight_total > 0.0) {
    stats.loss.total /= weight_total;
    stats.loss.policy /= weight_total;
    stats.loss.value /= weight_total;
    stats.loss.entropy /= weight_total;
    stats.loss.clip_fraction /= weight_total;
  }
  return stats;
}

double evaluate_policy(const ActorCritic& ac, const EnvConfig& env_config,
                       std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("no eval trajectories");
  GbwmEnv env(env_config);
  size_t successes = 0;
  for (const Trajectory& traj : trajectories) {
    EnvState state = env.reset(traj);
    double reward = 0.0;
    for (int t = 0; t < env_config.horizon; ++t) {
      const StepResult sr = env.step(ac.mode_action(state.obs));
      state = sr.state;
      reward = sr.reward;
    }
    if (reward > 0.5) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(trajectories.size());
}

TrainResult ppo_train(ActorCritic& ac, const ReturnSeries& train,
                      const PpoConfig& config,
                      const std::function<void(const EvalPoint&)>& progress) {
  config.validate();
  train.validate();

  std::vector<Trajectory> eval_set;
  eval_set.reserve(static_cast<size_t>(config.eval_episodes));
  for (int i = 0; i < config.eval_episodes; ++i) {
    Rng rng = Rng::substream(config.seed, kEvalTrajBase + static_cast<uint64_t>(i));
    eval_set.push_back(
        simulate_trajectory(train, config.window, config.env.horizon, rng));
  }

  Rng update_rng = Rng::substream(config.seed, kUpdateStream);
  AdamState actor_adam(ac.actor.param_count());
  AdamState critic_adam(ac.critic.param_count());

  TrainResult result;
  std::vector<double> best_actor = ac.actor.params();
  std::vector<double> best_critic = ac.critic.params();

  UpdateStats window_sum;  // updates since the previous evaluation
  long window_updates = 0;

  auto run_eval = [&](long episodes_seen) {
    EvalPoint point;
    point.episodes_seen = episodes_seen;
    point.success_rate = evaluate_policy(ac, config.env, eval_set);
    if (window_updates > 0) {
      const double inv = 1.0 / static_cast<double>(window_updates);
      point.policy_loss = window_sum.loss.policy * inv;
      point.value_loss = window_sum.loss.value * inv;
      point.entropy = window_sum.loss.entropy * inv;
      point.kl = window_sum.kl * inv;
      point.clip_fraction = window_sum.loss.clip_fraction * inv;
    }
    window_sum = UpdateStats{};
    window_updates = 0;
    result.curve.push_back(point);
    if (point.success_rate > result.best_success) {
      result.best_success = point.success_rate;
      result.best_at_episodes = episodes_seen;
      best_actor = ac.actor.params();
      best_critic = ac.critic.params();
    }
    if (progress) progress(point);
  };

  run_eval(0);

  long episodes_done = 0;
  long batches_done = 0;
  while (episodes_done < config.total_episodes) {
    const int episodes =
        static_cast<int>(std::min<long>(config.episodes_per_batch,
                                        config.total_episodes - episodes_done));
    std::vector<Transition> batch = collect_rollouts(
        ac, train, config, episodes,
        kTrainTrajBase + static_cast<uint64_t>(episodes_done), update_rng);
    const UpdateStats stats =
        ppo_update(ac, batch, config, actor_adam, critic_adam, update_rng);
    window_sum.loss.policy += stats.loss.policy;
    window_sum.loss.value += stats.loss.value;
    window_sum.loss.entropy += stats.loss.entropy;
    window_sum.loss.clip_fraction += stats.loss.clip_fraction;
    window_sum.kl += stats.kl;
    window_updates += 1;
    episodes_done += episodes;
    batches_done += 1;
    if (batches_done % config.eval_every_batches == 0 ||
        episodes_done >= config.total_episodes) {
      run_eval(episodes_done);
    }
  }

  ac.actor.params() = best_actor;
  ac.critic.params() = best_critic;
  result.episodes_run = episodes_done;
  return result;
}

static nlohmann::json net_to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const size_t in = net.layer_sizes()[l];
    const size_t out = net.layer_sizes()[l + 1];
    const std::span<const double> w = net.weights(l);
    nlohmann::json rows = nlohmann::json::array();
    for (size_t o = 0; o < out; ++o) {
      nlohmann::json row = nlohmann::json::array();
      for (size_t i = 0; i < in; ++i) row.push_back(w[o * in + i]);
      rows.push_back(std::move(row));
    }
    const std::span<const double> b = net.biases(l);
    layers.push_back({{"weights", std::move(rows)},
                      {"biases", std::vector<double>(b.begin(), b.end())}});
  }
  return {{"sizes", net.layer_sizes()}, {"layers", std::move(layers)}};
}

static Mlp net_from_json(const nlohmann::json& j) {
  Mlp net(j.at("sizes").get<std::vector<size_t>>());
  const nlohmann::json& layers = j.at("layers");
  if (layers.size() != net.layer_count()) {
    throw std::runtime_error("layer count mismatch in checkpoint");
  }
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const size_t in = net.layer_sizes()[l];
    const size_t out = net.layer_sizes()[l + 1];
    const nlohmann::json& rows = layers[l].at("weights");
    if (rows.size() != out) throw std::runtime_error("weight shape mismatch");
    std::span<double> w = net.weights(l);
    for (size_t o = 0; o < out; ++o) {
      const auto row = rows[o].get<std::vector<double>>();
      if (row.size() != in) throw std::runtime_error("weight shape mismatch");
      std::copy(row.begin(), row.end(), w.begin() + static_cast<long>(o * in));
    }
    const auto b = layers[l].at("biases").get<std::vector<double>>();
    if (b.size() != out) throw std::runtime_error("bias shape mismatch");
    std::copy(b.begin(), b.end(), net.biases(l).begin());
  }
  return net;
}

void save_policy(const ActorCritic& ac, const std::string& path,
                 const MetaList& meta) {
  nlohmann::json j;
  j["format"] = "gbwm-policy";
  j["version"] = 1;
  j["actor"] = net_to_json(ac.actor);
  j["critic"] = net_to_json(ac.critic);
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  j["meta"] = std::move(m);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << "\n";
  out.close();
  if (out.fail()) throw std::runtime_error("write failed: " + path);
}

ActorCritic load_policy(const std::string& path, MetaList* meta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "gbwm-policy") {
    throw std::runtime_error(path + ": not a policy checkpoint");
  }
  ActorCritic ac(j.at("actor").at("sizes").get<std::vector<size_t>>(),
                 j.at("critic").at("sizes").get<std::vector<size_t>>());
  ac.actor = net_from_json(j.at("actor"));
  ac.critic = net_from_json(j.at("critic"));
  if (meta != nullptr && j.contains("meta")) {
    for (const auto& [k, v] : j.at("meta").items()) {
      meta->emplace_back(k, v.get<std::string>());
    }
  }
  return ac;
}

void export_policy_grid(const ActorCritic& ac, const std::string& path,
                        size_t t_steps, size_t w_steps, double w_max,
                        const MetaList& meta) {
  if (t_steps < 2 || w_steps < 2) {
    throw std::invalid_argument("grid needs at least 2 steps per axis");
  }
  if (w_max <= 0.0) throw std::invalid_argument("w_max must be > 0");
  CsvWriter writer(path, meta);
  writer.header({"t_frac", "wealth_ratio", "alpha"});
  for (size_t ti = 0; ti < t_steps; ++ti) {
    const double t_frac = static_cast<double>(ti) / static_cast<double>(t_steps - 1);
    for (size_t wi = 0; wi < w_steps; ++wi) {
      const double ratio =
          w_max * static_cast<double>(wi) / static_cast<double>(w_steps - 1);
      const std::array<double, 2> obs{t_frac, ratio};
      writer.row({format_double(t_frac), format_double(ratio),
                  format_double(ac.mode_action(obs))});
    }
  }
  writer.close();
}

}  // namespace gbwm
