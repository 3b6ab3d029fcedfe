#include "gbwm/gbwm.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dp.hpp"
#include "env.hpp"
#include "evaluate.hpp"
#include "io.hpp"
#include "market_data.hpp"
#include "policy.hpp"
#include "ppo.hpp"
#include "strategies.hpp"
#include "trajectory.hpp"

struct gbwm_series {
  gbwm::ReturnSeries s;
};

struct gbwm_dp_table {
  gbwm::DpTable t;
};

struct gbwm_policy {
  gbwm::ActorCritic ac;
};

namespace {

thread_local std::string g_last_error = "no error";

void set_error(const std::string& message) { g_last_error = message; }

template <typename F>
gbwm_status wrap(F&& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return GBWM_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return GBWM_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown error");
    return GBWM_ERR_RUNTIME;
  }
}

gbwm_status require(bool ok, const char* what) {
  if (!ok) {
    set_error(std::string("null argument: ") + what);
    return GBWM_ERR_NULL_ARGUMENT;
  }
  return GBWM_OK;
}

#define GBWM_REQUIRE(expr)                                       \
  do {                                                           \
    gbwm_status st_ = require((expr) != nullptr, #expr);         \
    if (st_ != GBWM_OK) return st_;                              \
  } while (0)

gbwm::MetaList parse_meta(const char* meta) {
  gbwm::MetaList out;
  if (meta == nullptr) return out;
  std::stringstream ss(meta);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("meta line is not key=value: " + line);
    }
    out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

gbwm::EnvConfig to_env_config(const gbwm_env_config& c) {
  gbwm::EnvConfig env;
  env.horizon = c.horizon;
  env.goal_wealth = c.goal_wealth;
  env.initial_wealth_ratio = c.initial_wealth_ratio;
  env.validate();
  return env;
}

// Builds the named strategy; `param` overrides the merton gamma or the
// variance budget when finite.
std::unique_ptr<gbwm::Policy> make_named_policy(
    const std::string& name, const gbwm_eval_options& opts,
    const gbwm::EnvConfig& env, double param = 0.0, bool use_param = false) {
  if (name == "glide_path") return gbwm::make_glide_path(env.horizon);
  if (name == "dp") {
    if (opts.dp == nullptr) {
      throw std::invalid_argument("strategy dp needs a solved table");
    }
    return gbwm::make_dp(opts.dp->t);
  }
  if (name == "rl") {
    if (opts.rl == nullptr) {
      throw std::invalid_argument("strategy rl needs a trained policy");
    }
    return gbwm::make_rl(opts.rl->ac);
  }
  if (name == "merton" || name == "variance_budget") {
    if (opts.train == nullptr) {
      throw std::invalid_argument("strategy " + name +
                                  " needs the training series");
    }
    const gbwm::StrategyContext ctx = gbwm::StrategyContext::from_series(
        opts.train->s, env.horizon, env.goal_wealth);
    if (name == "merton") {
      return gbwm::make_merton(ctx, use_param ? param : opts.merton_gamma);
    }
    return gbwm::make_variance_budget(ctx,
                                      use_param ? param : opts.vb_budget);
  }
  throw std::invalid_argument("unknown strategy: " + name);
}

gbwm::EvalProtocol parse_protocol(const char* text, int count,
                                  unsigned long long seed) {
  gbwm::EvalProtocol proto = gbwm::EvalProtocol::parse(text);
  proto.count = count;
  proto.seed = seed;
  return proto;
}

}  // namespace

extern "C" {

const char* gbwm_last_error(void) { return g_last_error.c_str(); }

const char* gbwm_version(void) { return "0.1.0"; }

gbwm_status gbwm_series_load(const char* path, const char* date_col,
                             const char* bond_col, const char* stock_col,
                             gbwm_series** out) {
  GBWM_REQUIRE(path);
  GBWM_REQUIRE(out);
  return wrap([&] {
    gbwm::ColumnSpec cols;
    if (date_col != nullptr) cols.date_col = date_col;
    if (bond_col != nullptr) cols.bond_col = bond_col;
    if (stock_col != nullptr) cols.stock_col = stock_col;
    auto handle = std::make_unique<gbwm_series>();
    handle->s = gbwm::load_returns(path, cols);
    *out = handle.release();
    return GBWM_OK;
  });
}

gbwm_status gbwm_series_save(const gbwm_series* series, const char* path,
                             const char* meta) {
  GBWM_REQUIRE(series);
  GBWM_REQUIRE(path);
  return wrap([&] {
    gbwm::save_returns(series->s, path, parse_meta(meta));
    return GBWM_OK;
  });
}

gbwm_status gbwm_series_split(const gbwm_series* series, int year, int month,
                              gbwm_series** train_out,
                              gbwm_series** test_out) {
  GBWM_REQUIRE(series);
  GBWM_REQUIRE(train_out);
  GBWM_REQUIRE(test_out);
  return wrap([&] {
    auto [train, test] =
        gbwm::split_train_test(series->s, gbwm::MonthKey{year, month});
    auto a = std::make_unique<gbwm_series>();
    auto b = std::make_unique<gbwm_series>();
    a->s = std::move(train);
    b->s = std::move(test);
    *train_out = a.release();
    *test_out = b.release();
    return GBWM_OK;
  });
}

long gbwm_series_length(const gbwm_series* series) {
  return series == nullptr ? -1 : static_cast<long>(series->s.size());
}

gbwm_status gbwm_series_range(const gbwm_series* series, int* first_year,
                              int* first_month, int* last_year,
                              int* last_month) {
  GBWM_REQUIRE(series);
  return wrap([&] {
    if (series->s.months.empty()) {
      throw std::invalid_argument("series is empty");
    }
    const gbwm::MonthKey& first = series->s.months.front();
    const gbwm::MonthKey& last = series->s.months.back();
    if (first_year != nullptr) *first_year = first.year;
    if (first_month != nullptr) *first_month = first.month;
    if (last_year != nullptr) *last_year = last.year;
    if (last_month != nullptr) *last_month = last.month;
    return GBWM_OK;
  });
}

void gbwm_series_free(gbwm_series* series) { delete series; }

void gbwm_env_config_default(gbwm_env_config* config) {
  if (config == nullptr) return;
  const gbwm::EnvConfig defaults;
  config->horizon = defaults.horizon;
  config->goal_wealth = defaults.goal_wealth;
  config->initial_wealth_ratio = defaults.initial_wealth_ratio;
}

gbwm_status gbwm_generate_csv(const gbwm_series* series, const char* protocol,
                              int count, unsigned long long seed, int horizon,
                              const char* path, const char* meta) {
  GBWM_REQUIRE(series);
  GBWM_REQUIRE(protocol);
  GBWM_REQUIRE(path);
  return wrap([&] {
    const gbwm::EvalProtocol proto = parse_protocol(protocol, count, seed);
    const std::vector<gbwm::Trajectory> trajectories =
        gbwm::make_trajectories(series->s, proto, horizon);
    gbwm::MetaList all = parse_meta(meta);
    all.emplace_back("protocol", proto.name());
    all.emplace_back("trajectories", std::to_string(trajectories.size()));
    gbwm::CsvWriter writer(path, all);
    writer.header({"trajectory_id", "step", "bond_return", "stock_return"});
    for (size_t i = 0; i < trajectories.size(); ++i) {
      const gbwm::Trajectory& traj = trajectories[i];
      for (size_t t = 0; t < traj.returns.size(); ++t) {
        writer.row({std::to_string(i), std::to_string(t),
                    gbwm::format_double(traj.returns[t].bond),
                    gbwm::format_double(traj.returns[t].stock)});
      }
    }
    writer.close();
    return GBWM_OK;
  });
}

gbwm_status gbwm_spread_csv(const gbwm_series* series, int window,
                            const char* path, const char* meta) {
  GBWM_REQUIRE(series);
  GBWM_REQUIRE(path);
  return wrap([&] {
    const gbwm::MomentsSpread spread =
        gbwm::mean_estimate_spread(series->s, window);
    gbwm::MetaList all = parse_meta(meta);
    all.emplace_back("window", std::to_string(window));
    all.emplace_back("windows", std::to_string(spread.end_months.size()));
    all.emplace_back("mu_stock_min", gbwm::format_double(spread.mu_stock_min));
    all.emplace_back("mu_stock_max", gbwm::format_double(spread.mu_stock_max));
    all.emplace_back("mu_stock_std", gbwm::format_double(spread.mu_stock_std));
    gbwm::CsvWriter writer(path, all);
    writer.header({"end_month", "mu_bond", "mu_stock", "sigma_bond",
                   "sigma_stock", "cov_bond_stock"});
    for (size_t i = 0; i < spread.end_months.size(); ++i) {
      const gbwm::Moments& m = spread.window_moments[i];
      writer.row({spread.end_months[i].str(), gbwm::format_double(m.mu[0]),
                  gbwm::format_double(m.mu[1]),
                  gbwm::format_double(std::sqrt(m.sigma[0][0])),
                  gbwm::format_double(std::sqrt(m.sigma[1][1])),
                  gbwm::format_double(m.sigma[0][1])});
    }
    writer.close();
    return GBWM_OK;
  });
}

void gbwm_dp_config_default(gbwm_dp_config* config) {
  if (config == nullptr) return;
  const gbwm::DpConfig defaults;
  config->horizon = defaults.horizon;
  config->goal_wealth = defaults.goal_wealth;
  config->initial_wealth = defaults.initial_wealth;
  config->grid_size = defaults.grid_size;
  config->alpha_count = defaults.alpha_count;
}

gbwm_status gbwm_dp_solve(const gbwm_series* train,
                          const gbwm_dp_config* config, gbwm_dp_table** out) {
  GBWM_REQUIRE(train);
  GBWM_REQUIRE(config);
  GBWM_REQUIRE(out);
  return wrap([&] {
    gbwm::DpConfig cfg;
    cfg.horizon = config->horizon;
    cfg.goal_wealth = config->goal_wealth;
    cfg.initial_wealth = config->initial_wealth;
    cfg.grid_size = config->grid_size;
    cfg.alpha_count = config->alpha_count;
    const gbwm::Moments moments =
        gbwm::estimate_moments(train->s, 0, train->s.size());
    auto handle = std::make_unique<gbwm_dp_table>();
    handle->t = gbwm::dp_solve(moments, cfg);
    *out = handle.release();
    return GBWM_OK;
  });
}

gbwm_status gbwm_dp_save(const gbwm_dp_table* table, const char* path,
                         const char* meta) {
  GBWM_REQUIRE(table);
  GBWM_REQUIRE(path);
  return wrap([&] {
    gbwm::save_dp_table(table->t, path, parse_meta(meta));
    return GBWM_OK;
  });
}

gbwm_status gbwm_dp_load(const char* path, gbwm_dp_table** out) {
  GBWM_REQUIRE(path);
  GBWM_REQUIRE(out);
  return wrap([&] {
    auto handle = std::make_unique<gbwm_dp_table>();
    handle->t = gbwm::load_dp_table(path);
    *out = handle.release();
    return GBWM_OK;
  });
}

gbwm_status gbwm_dp_initial_value(const gbwm_dp_table* table, double* out) {
  GBWM_REQUIRE(table);
  GBWM_REQUIRE(out);
  return wrap([&] {
    const gbwm::DpTable& t = table->t;
    *out = t.value_at(0, t.grid.nearest(t.config.initial_wealth));
    return GBWM_OK;
  });
}

void gbwm_dp_free(gbwm_dp_table* table) { delete table; }

void gbwm_ppo_config_default(gbwm_ppo_config* config) {
  if (config == nullptr) return;
  const gbwm::PpoConfig defaults;
  gbwm_env_config_default(&config->env);
  config->lr = defaults.lr;
  config->epochs = defaults.epochs;
  config->minibatch_size = defaults.minibatch_size;
  config->episodes_per_batch = defaults.episodes_per_batch;
  config->total_episodes = defaults.total_episodes;
  config->clip_epsilon = defaults.clip_epsilon;
  config->value_coef = defaults.value_coef;
  config->entropy_coef = defaults.entropy_coef;
  config->discount = defaults.discount;
  config->gae_lambda = defaults.gae_lambda;
  config->kl_limit = defaults.kl_limit;
  config->window = defaults.window;
  config->eval_every_batches = defaults.eval_every_batches;
  config->eval_episodes = defaults.eval_episodes;
  config->seed = defaults.seed;
  config->hidden_sizes = nullptr;
  config->hidden_count = 0;
}

gbwm_status gbwm_train(const gbwm_series* train, const gbwm_ppo_config* config,
                       const char* checkpoint_path, const char* curve_path,
                       const char* meta, gbwm_progress_fn progress, void* user,
                       gbwm_policy** out) {
  GBWM_REQUIRE(train);
  GBWM_REQUIRE(config);
  GBWM_REQUIRE(checkpoint_path);
  return wrap([&] {
    gbwm::PpoConfig cfg;
    cfg.env = to_env_config(config->env);
    cfg.lr = config->lr;
    cfg.epochs = config->epochs;
    cfg.minibatch_size = config->minibatch_size;
    cfg.episodes_per_batch = config->episodes_per_batch;
    cfg.total_episodes = config->total_episodes;
    cfg.clip_epsilon = config->clip_epsilon;
    cfg.value_coef = config->value_coef;
    cfg.entropy_coef = config->entropy_coef;
    cfg.discount = config->discount;
    cfg.gae_lambda = config->gae_lambda;
    cfg.kl_limit = config->kl_limit;
    cfg.window = config->window;
    cfg.eval_every_batches = config->eval_every_batches;
    cfg.eval_episodes = config->eval_episodes;
    cfg.seed = config->seed;
    if (config->hidden_sizes != nullptr && config->hidden_count > 0) {
      std::vector<size_t> actor{2}, critic{2};
      for (unsigned i = 0; i < config->hidden_count; ++i) {
        actor.push_back(config->hidden_sizes[i]);
        critic.push_back(config->hidden_sizes[i]);
      }
      actor.push_back(2);
      critic.push_back(1);
      cfg.actor_sizes = std::move(actor);
      cfg.critic_sizes = std::move(critic);
    }
    cfg.validate();

    gbwm::Rng init_rng = gbwm::Rng::substream(cfg.seed, 0);
    gbwm::ActorCritic ac = gbwm::ActorCritic::init(cfg, init_rng);
    std::function<void(const gbwm::EvalPoint&)> on_eval;
    if (progress != nullptr) {
      on_eval = [progress, user](const gbwm::EvalPoint& p) {
        progress(p.episodes_seen, p.success_rate, user);
      };
    }
    const gbwm::TrainResult result = gbwm::ppo_train(ac, train->s, cfg, on_eval);

    gbwm::MetaList all = parse_meta(meta);
    all.emplace_back("best_success", gbwm::format_double(result.best_success));
    all.emplace_back("best_at_episodes",
                     std::to_string(result.best_at_episodes));
    all.emplace_back("episodes_run", std::to_string(result.episodes_run));
    gbwm::save_policy(ac, checkpoint_path, all);
    if (curve_path != nullptr) {
      gbwm::CsvWriter writer(curve_path, all);
      writer.header({"episodes", "success_rate", "policy_loss", "value_loss",
                     "entropy", "approx_kl", "clip_fraction"});
      for (const gbwm::EvalPoint& p : result.curve) {
        writer.row({std::to_string(p.episodes_seen),
                    gbwm::format_double(p.success_rate),
                    gbwm::format_double(p.policy_loss),
                    gbwm::format_double(p.value_loss),
                    gbwm::format_double(p.entropy),
                    gbwm::format_double(p.kl),
                    gbwm::format_double(p.clip_fraction)});
      }
      writer.close();
    }
    if (out != nullptr) {
      *out = new gbwm_policy{std::move(ac)};
    }
    return GBWM_OK;
  });
}

gbwm_status gbwm_policy_load(const char* path, gbwm_policy** out) {
  GBWM_REQUIRE(path);
  GBWM_REQUIRE(out);
  return wrap([&] {
    *out = new gbwm_policy{gbwm::load_policy(path)};
    return GBWM_OK;
  });
}

void gbwm_policy_free(gbwm_policy* policy) { delete policy; }

gbwm_status gbwm_policy_action(const gbwm_policy* policy, double t_frac,
                               double wealth_ratio, double* alpha_out) {
  GBWM_REQUIRE(policy);
  GBWM_REQUIRE(alpha_out);
  return wrap([&] {
    const std::array<double, 2> obs{t_frac, wealth_ratio};
    *alpha_out = policy->ac.mode_action(obs);
    return GBWM_OK;
  });
}

gbwm_status gbwm_policy_grid_csv(const gbwm_policy* policy,
                                 unsigned long t_steps, unsigned long w_steps,
                                 double w_max, const char* path,
                                 const char* meta) {
  GBWM_REQUIRE(policy);
  GBWM_REQUIRE(path);
  return wrap([&] {
    gbwm::export_policy_grid(policy->ac, path, t_steps, w_steps, w_max,
                             parse_meta(meta));
    return GBWM_OK;
  });
}

void gbwm_eval_options_default(gbwm_eval_options* options) {
  if (options == nullptr) return;
  gbwm_env_config_default(&options->env);
  options->train = nullptr;
  options->merton_gamma = 0.004;
  options->vb_budget = 0.013;
  options->dp = nullptr;
  options->rl = nullptr;
  options->workers = 1;
}

gbwm_status gbwm_evaluate(const gbwm_series* series, const char* strategy,
                          const char* protocol, int count,
                          unsigned long long seed,
                          const gbwm_eval_options* options,
                          const char* glide_csv_path, const char* meta,
                          double* success_out, unsigned long* episodes_out) {
  GBWM_REQUIRE(series);
  GBWM_REQUIRE(strategy);
  GBWM_REQUIRE(protocol);
  GBWM_REQUIRE(options);
  return wrap([&] {
    const gbwm::EnvConfig env = to_env_config(options->env);
    const gbwm::EvalProtocol proto = parse_protocol(protocol, count, seed);
    const std::vector<gbwm::Trajectory> trajectories =
        gbwm::make_trajectories(series->s, proto, env.horizon,
                                options->workers);
    std::unique_ptr<gbwm::Policy> policy =
        make_named_policy(strategy, *options, env);
    const gbwm::EvalResult result =
        gbwm::run_protocol(*policy, env, trajectories, options->workers);
    if (glide_csv_path != nullptr) {
      gbwm::MetaList all = parse_meta(meta);
      all.emplace_back("strategy", strategy);
      all.emplace_back("protocol", proto.name());
      all.emplace_back("episodes", std::to_string(result.episodes));
      all.emplace_back("success_rate",
                       gbwm::format_double(result.success_rate));
      all.emplace_back("final_mean_wealth",
                       gbwm::format_double(result.mean_wealth.back()));
      gbwm::CsvWriter writer(glide_csv_path, all);
      writer.header({"t", "mean_alpha", "mean_wealth"});
      for (size_t t = 0; t < result.mean_alpha.size(); ++t) {
        writer.row({std::to_string(t),
                    gbwm::format_double(result.mean_alpha[t]),
                    gbwm::format_double(result.mean_wealth[t])});
      }
      writer.close();
    }
    if (success_out != nullptr) *success_out = result.success_rate;
    if (episodes_out != nullptr) {
      *episodes_out = static_cast<unsigned long>(result.episodes);
    }
    return GBWM_OK;
  });
}

gbwm_status gbwm_sweep(const gbwm_series* series, const char* strategy,
                       const char* protocol, int count,
                       unsigned long long seed,
                       const gbwm_eval_options* options, double lo, double hi,
                       int steps, const char* csv_path, const char* meta,
                       double* best_param_out, double* best_success_out) {
  GBWM_REQUIRE(series);
  GBWM_REQUIRE(strategy);
  GBWM_REQUIRE(protocol);
  GBWM_REQUIRE(options);
  return wrap([&] {
    const std::string name = strategy;
    if (name != "merton" && name != "variance_budget") {
      throw std::invalid_argument("sweep supports merton and variance_budget");
    }
    if (steps < 2) throw std::invalid_argument("steps must be >= 2");
    if (!(lo < hi)) throw std::invalid_argument("need lo < hi");
    const gbwm::EnvConfig env = to_env_config(options->env);
    const gbwm::EvalProtocol proto = parse_protocol(protocol, count, seed);
    const std::vector<gbwm::Trajectory> trajectories =
        gbwm::make_trajectories(series->s, proto, env.horizon,
                                options->workers);

    std::vector<double> params(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i) {
      params[static_cast<size_t>(i)] =
          lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
    }
    const gbwm::SweepResult result = gbwm::sweep_parameter(
        [&](double p) { return make_named_policy(name, *options, env, p, true); },
        params, env, trajectories, options->workers);

    if (csv_path != nullptr) {
      gbwm::MetaList all = parse_meta(meta);
      all.emplace_back("strategy", name);
      all.emplace_back("protocol", proto.name());
      all.emplace_back("episodes", std::to_string(trajectories.size()));
      all.emplace_back("best_param", gbwm::format_double(result.best_param));
      all.emplace_back("best_success",
                       gbwm::format_double(result.best_success));
      gbwm::CsvWriter writer(csv_path, all);
      writer.header({"param", "success_rate"});
      for (const gbwm::SweepPoint& p : result.points) {
        writer.row({gbwm::format_double(p.param),
                    gbwm::format_double(p.success)});
      }
      writer.close();
    }
    if (best_param_out != nullptr) *best_param_out = result.best_param;
    if (best_success_out != nullptr) *best_success_out = result.best_success;
    return GBWM_OK;
  });
}

gbwm_status gbwm_table(const gbwm_series* test,
                       const gbwm_eval_options* options, int count,
                       unsigned long long seed, const char* csv_path,
                       const char* meta) {
  GBWM_REQUIRE(test);
  GBWM_REQUIRE(options);
  GBWM_REQUIRE(csv_path);
  return wrap([&] {
    gbwm::TableSpec spec;
    spec.env = to_env_config(options->env);
    spec.protocols = gbwm::default_protocols(count, seed);
    if (options->train == nullptr) {
      throw std::invalid_argument("table needs the training series");
    }
    spec.ctx = gbwm::StrategyContext::from_series(
        options->train->s, spec.env.horizon, spec.env.goal_wealth);
    spec.merton_gamma = options->merton_gamma;
    spec.vb_budget = options->vb_budget;
    spec.dp = options->dp != nullptr ? &options->dp->t : nullptr;
    spec.rl = options->rl != nullptr ? &options->rl->ac : nullptr;
    spec.workers = options->workers;
    const gbwm::TableResult table = gbwm::build_table(test->s, spec);
    gbwm::save_table_csv(table, csv_path, parse_meta(meta));
    return GBWM_OK;
  });
}

}  // extern "C"
