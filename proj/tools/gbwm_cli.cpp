#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gbwm/gbwm.h"

// Command-line front end. Talks to the library exclusively through the C
// API; every subcommand embeds its resolved options in the files it writes.

namespace {

void check(gbwm_status status) {
  if (status != GBWM_OK) throw std::runtime_error(gbwm_last_error());
}

struct SeriesDeleter {
  void operator()(gbwm_series* s) const { gbwm_series_free(s); }
};
struct DpDeleter {
  void operator()(gbwm_dp_table* t) const { gbwm_dp_free(t); }
};
struct PolicyDeleter {
  void operator()(gbwm_policy* p) const { gbwm_policy_free(p); }
};
using SeriesPtr = std::unique_ptr<gbwm_series, SeriesDeleter>;
using DpPtr = std::unique_ptr<gbwm_dp_table, DpDeleter>;
using PolicyPtr = std::unique_ptr<gbwm_policy, PolicyDeleter>;

SeriesPtr load_canonical(const std::string& path) {
  gbwm_series* s = nullptr;
  check(gbwm_series_load(path.c_str(), "year,month", "bond_return",
                         "stock_return", &s));
  return SeriesPtr(s);
}

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Meta builder: newline-separated key=value lines for output headers.
struct Meta {
  std::string text;
  Meta& add(const std::string& key, const std::string& value) {
    text += key + "=" + value + "\n";
    return *this;
  }
  Meta& add(const std::string& key, double value) { return add(key, fmt(value)); }
  Meta& add(const std::string& key, long long value) {
    return add(key, std::to_string(value));
  }
  const char* c_str() const { return text.c_str(); }
};

// Shared environment options, registered at the root so every subcommand and
// the top of the config file can set them.
struct EnvOptions {
  int horizon = 120;
  double goal_wealth = 1.0;
  double initial_wealth_ratio = 0.6;

  void register_options(CLI::App& app) {
    app.add_option("--horizon", horizon, "Episode length in months");
    app.add_option("--goal-wealth", goal_wealth, "Target wealth");
    app.add_option("--initial-wealth-ratio", initial_wealth_ratio,
                   "Starting wealth as a fraction of the goal");
  }
  gbwm_env_config to_config() const {
    return gbwm_env_config{horizon, goal_wealth, initial_wealth_ratio};
  }
  Meta& describe(Meta& meta) const {
    meta.add("horizon", static_cast<long long>(horizon));
    meta.add("goal_wealth", goal_wealth);
    meta.add("initial_wealth_ratio", initial_wealth_ratio);
    return meta;
  }
};

struct PolicySpec {
  std::string name;  // glide_path | merton | variance_budget | dp | rl
  std::string arg;   // parameter or artifact path, may be empty
};

PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec spec;
  const size_t colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (colon != std::string::npos) spec.arg = text.substr(colon + 1);
  if (spec.name == "dg") spec.name = "glide_path";
  if (spec.name == "mc") spec.name = "merton";
  if (spec.name == "vb") spec.name = "variance_budget";
  if (spec.name != "glide_path" && spec.name != "merton" &&
      spec.name != "variance_budget" && spec.name != "dp" && spec.name != "rl") {
    throw std::runtime_error("unknown policy: " + text);
  }
  if ((spec.name == "dp" || spec.name == "rl") && spec.arg.empty()) {
    throw std::runtime_error(spec.name + " needs an artifact path, e.g. " +
                             spec.name + ":out/" +
                             (spec.name == "dp" ? "dp_table.csv" : "policy.json"));
  }
  return spec;
}

struct IngestOpts {
  std::string input, date_col = "date", bond_col = "bond_return",
              stock_col = "stock_return", split = "1991-01", out = "out";
};

void setup_ingest(CLI::App& app, const EnvOptions&) {
  auto opts = std::make_shared<IngestOpts>();
  CLI::App* cmd = app.add_subcommand(
      "ingest", "Load a raw return CSV, split it, write train/test files");
  cmd->add_option("--input", opts->input, "Raw monthly return CSV")->required();
  cmd->add_option("--date-col", opts->date_col,
                  "Date column (YYYY-MM) or 'year,month' pair");
  cmd->add_option("--bond-col", opts->bond_col, "Bond return column");
  cmd->add_option("--stock-col", opts->stock_col, "Stock return column");
  cmd->add_option("--split", opts->split,
                  "First test month (YYYY-MM); earlier months train");
  cmd->add_option("--out", opts->out, "Output directory");
  cmd->callback([opts] {
    gbwm_series* raw = nullptr;
    check(gbwm_series_load(opts->input.c_str(), opts->date_col.c_str(),
                           opts->bond_col.c_str(), opts->stock_col.c_str(),
                           &raw));
    SeriesPtr series(raw);
    int year = 0, month = 0;
    if (std::sscanf(opts->split.c_str(), "%d-%d", &year, &month) != 2) {
      throw std::runtime_error("bad --split, expected YYYY-MM: " + opts->split);
    }
    gbwm_series *train_raw = nullptr, *test_raw = nullptr;
    check(gbwm_series_split(series.get(), year, month, &train_raw, &test_raw));
    SeriesPtr train(train_raw), test(test_raw);

    std::filesystem::create_directories(opts->out);
    Meta meta;
    meta.add("command", "ingest")
        .add("input", opts->input)
        .add("date_col", opts->date_col)
        .add("bond_col", opts->bond_col)
        .add("stock_col", opts->stock_col)
        .add("split", opts->split);
    const std::string train_path = opts->out + "/train.csv";
    const std::string test_path = opts->out + "/test.csv";
    Meta train_meta = meta, test_meta = meta;
    train_meta.add("part", "train");
    test_meta.add("part", "test");
    check(gbwm_series_save(train.get(), train_path.c_str(), train_meta.c_str()));
    check(gbwm_series_save(test.get(), test_path.c_str(), test_meta.c_str()));
    std::printf("wrote %s (%ld months) and %s (%ld months)\n",
                train_path.c_str(), gbwm_series_length(train.get()),
                test_path.c_str(), gbwm_series_length(test.get()));
  });
}

struct SimulateOpts {
  std::string input, mode = "gaussian", windows = "36", blocks = "1", out;
  int count = 10000, length = 120, spread_window = 0;
  unsigned long long seed = 7;
  std::string spread_out;
};

void setup_simulate(CLI::App& app, const EnvOptions&) {
  auto opts = std::make_shared<SimulateOpts>();
  CLI::App* cmd = app.add_subcommand(
      "simulate", "Generate return trajectories from a series");
  cmd->add_option("--input", opts->input, "Canonical return CSV")->required();
  cmd->add_option("--mode", opts->mode, "gaussian | bootstrap | historical")
      ->check(CLI::IsMember({"gaussian", "bootstrap", "historical"}));
  cmd->add_option("--windows", opts->windows,
                  "Rolling-window sizes in months (gaussian), e.g. 24,36,48");
  cmd->add_option("--blocks", opts->blocks,
                  "Block lengths in years (bootstrap), e.g. 1,2,3");
  cmd->add_option("--count", opts->count, "Trajectories to generate");
  cmd->add_option("--length", opts->length, "Trajectory length in months");
  cmd->add_option("--seed", opts->seed, "RNG seed");
  cmd->add_option("--out", opts->out, "Output CSV")->required();
  cmd->add_option("--spread-window", opts->spread_window,
                  "Also write per-window moment estimates for this window");
  cmd->add_option("--spread-out", opts->spread_out,
                  "Output CSV for the moment-estimate spread");
  cmd->callback([opts] {
    SeriesPtr series = load_canonical(opts->input);
    std::string protocol;
    if (opts->mode == "gaussian") {
      protocol = "simulated:" + opts->windows;
    } else if (opts->mode == "bootstrap") {
      protocol = "bootstrap:" + opts->blocks;
    } else {
      protocol = "historical";
    }
    Meta meta;
    meta.add("command", "simulate")
        .add("input", opts->input)
        .add("mode", opts->mode)
        .add("count", static_cast<long long>(opts->count))
        .add("length", static_cast<long long>(opts->length))
        .add("seed", std::to_string(opts->seed));
    ensure_parent_dir(opts->out);
    check(gbwm_generate_csv(series.get(), protocol.c_str(), opts->count,
                            opts->seed, opts->length, opts->out.c_str(),
                            meta.c_str()));
    std::printf("wrote %s\n", opts->out.c_str());
    if (!opts->spread_out.empty()) {
      if (opts->spread_window < 2) {
        throw std::runtime_error("--spread-out needs --spread-window >= 2");
      }
      Meta spread_meta;
      spread_meta.add("command", "simulate")
          .add("input", opts->input)
          .add("output", "moment-spread");
      ensure_parent_dir(opts->spread_out);
      check(gbwm_spread_csv(series.get(), opts->spread_window,
                            opts->spread_out.c_str(), spread_meta.c_str()));
      std::printf("wrote %s\n", opts->spread_out.c_str());
    }
  });
}

struct DpSolveOpts {
  std::string train, out;
  unsigned long nodes = 300, alphas = 21;
};

void setup_dp_solve(CLI::App& app, const EnvOptions& env) {
  auto opts = std::make_shared<DpSolveOpts>();
  CLI::App* cmd = app.add_subcommand(
      "dp-solve", "Solve the dynamic program on training moments");
  cmd->add_option("--train", opts->train, "Training return CSV")->required();
  cmd->add_option("--nodes", opts->nodes, "Wealth grid size");
  cmd->add_option("--alphas", opts->alphas, "Stock-weight candidates");
  cmd->add_option("--out", opts->out, "Output table CSV")->required();
  cmd->callback([opts, &env] {
    SeriesPtr train = load_canonical(opts->train);
    gbwm_dp_config config;
    gbwm_dp_config_default(&config);
    config.horizon = env.horizon;
    config.goal_wealth = env.goal_wealth;
    config.initial_wealth = env.initial_wealth_ratio * env.goal_wealth;
    config.grid_size = opts->nodes;
    config.alpha_count = opts->alphas;
    gbwm_dp_table* table_raw = nullptr;
    check(gbwm_dp_solve(train.get(), &config, &table_raw));
    DpPtr table(table_raw);
    Meta meta;
    meta.add("command", "dp-solve")
        .add("train", opts->train)
        .add("nodes", static_cast<long long>(opts->nodes))
        .add("alphas", static_cast<long long>(opts->alphas));
    ensure_parent_dir(opts->out);
    check(gbwm_dp_save(table.get(), opts->out.c_str(), meta.c_str()));
    double value = 0.0;
    check(gbwm_dp_initial_value(table.get(), &value));
    std::printf("wrote %s (success probability at start: %.4f)\n",
                opts->out.c_str(), value);
  });
}

struct TrainOpts {
  std::string train, out, curve_out, hidden = "6,6";
  long episodes = 200000;
  unsigned long long seed = 7;
  double lr = 1e-4, clip_epsilon = 0.2, value_coef = 0.5, entropy_coef = 0.0,
         discount = 1.0, gae_lambda = 0.95, kl_limit = 0.05;
  int epochs = 10, episodes_per_batch = 32, window = 120,
      eval_every_batches = 50, eval_episodes = 2000;
  unsigned long minibatch_size = 256;
};

void setup_train(CLI::App& app, const EnvOptions& env) {
  auto opts = std::make_shared<TrainOpts>();
  CLI::App* cmd =
      app.add_subcommand("train", "Train the PPO allocation policy");
  cmd->add_option("--train", opts->train, "Training return CSV")->required();
  cmd->add_option("--episodes", opts->episodes, "Total training episodes");
  cmd->add_option("--seed", opts->seed, "RNG seed");
  cmd->add_option("--out", opts->out, "Checkpoint JSON path")->required();
  cmd->add_option("--curve-out", opts->curve_out, "Training curve CSV path");
  cmd->add_option("--lr", opts->lr, "Adam learning rate");
  cmd->add_option("--epochs", opts->epochs, "Update epochs per batch");
  cmd->add_option("--minibatch-size", opts->minibatch_size, "Minibatch size");
  cmd->add_option("--episodes-per-batch", opts->episodes_per_batch,
                  "Episodes collected per update");
  cmd->add_option("--clip-epsilon", opts->clip_epsilon, "PPO clip range");
  cmd->add_option("--value-coef", opts->value_coef, "Value loss weight");
  cmd->add_option("--entropy-coef", opts->entropy_coef, "Entropy bonus weight");
  cmd->add_option("--discount", opts->discount, "Discount factor");
  cmd->add_option("--gae-lambda", opts->gae_lambda, "GAE lambda");
  cmd->add_option("--kl-limit", opts->kl_limit,
                  "Stop epochs once approximate KL exceeds this");
  cmd->add_option("--window", opts->window,
                  "Rolling window (months) for generated training paths");
  cmd->add_option("--eval-every-batches", opts->eval_every_batches,
                  "Batches between held-out evaluations");
  cmd->add_option("--eval-episodes", opts->eval_episodes,
                  "Held-out evaluation set size");
  cmd->add_option("--hidden", opts->hidden,
                  "Hidden layer sizes, e.g. 6,6 (shared by actor and critic)");
  cmd->callback([opts, &env] {
    SeriesPtr train = load_canonical(opts->train);
    gbwm_ppo_config config;
    gbwm_ppo_config_default(&config);
    config.env = env.to_config();
    config.lr = opts->lr;
    config.epochs = opts->epochs;
    config.minibatch_size = opts->minibatch_size;
    config.episodes_per_batch = opts->episodes_per_batch;
    config.total_episodes = opts->episodes;
    config.clip_epsilon = opts->clip_epsilon;
    config.value_coef = opts->value_coef;
    config.entropy_coef = opts->entropy_coef;
    config.discount = opts->discount;
    config.gae_lambda = opts->gae_lambda;
    config.kl_limit = opts->kl_limit;
    config.window = opts->window;
    config.eval_every_batches = opts->eval_every_batches;
    config.eval_episodes = opts->eval_episodes;
    config.seed = opts->seed;
    std::vector<unsigned> hidden;
    {
      std::string item;
      std::stringstream ss(opts->hidden);
      while (std::getline(ss, item, ',')) {
        hidden.push_back(static_cast<unsigned>(std::stoul(item)));
      }
    }
    config.hidden_sizes = hidden.empty() ? nullptr : hidden.data();
    config.hidden_count = static_cast<unsigned>(hidden.size());

    Meta meta;
    meta.add("command", "train").add("train", opts->train);
    env.describe(meta);
    meta.add("episodes", static_cast<long long>(opts->episodes))
        .add("seed", std::to_string(opts->seed))
        .add("lr", opts->lr)
        .add("epochs", static_cast<long long>(opts->epochs))
        .add("minibatch_size", static_cast<long long>(opts->minibatch_size))
        .add("episodes_per_batch",
             static_cast<long long>(opts->episodes_per_batch))
        .add("clip_epsilon", opts->clip_epsilon)
        .add("value_coef", opts->value_coef)
        .add("entropy_coef", opts->entropy_coef)
        .add("discount", opts->discount)
        .add("gae_lambda", opts->gae_lambda)
        .add("kl_limit", opts->kl_limit)
        .add("window", static_cast<long long>(opts->window))
        .add("eval_every_batches",
             static_cast<long long>(opts->eval_every_batches))
        .add("eval_episodes", static_cast<long long>(opts->eval_episodes))
        .add("hidden", opts->hidden);

    ensure_parent_dir(opts->out);
    if (!opts->curve_out.empty()) ensure_parent_dir(opts->curve_out);
    auto progress = [](long episodes_seen, double success_rate, void*) {
      std::fprintf(stderr, "episodes %ld: eval success %.4f\n", episodes_seen,
                   success_rate);
    };
    check(gbwm_train(train.get(), &config, opts->out.c_str(),
                     opts->curve_out.empty() ? nullptr : opts->curve_out.c_str(),
                     meta.c_str(), progress, nullptr, nullptr));
    std::printf("wrote %s\n", opts->out.c_str());
    if (!opts->curve_out.empty()) {
      std::printf("wrote %s\n", opts->curve_out.c_str());
    }
  });
}

// Builds eval options plus owning artifact handles for a policy spec.
struct LoadedPolicy {
  SeriesPtr train;
  DpPtr dp;
  PolicyPtr rl;
  gbwm_eval_options options{};
};

struct EvaluateOpts {
  std::string input, train, policy, protocol, out, glide_out;
  int count = 10000, workers = 1;
  unsigned long long seed = 7;
  double merton_gamma = 0.004, vb_budget = 0.013;
};

void setup_evaluate(CLI::App& app, const EnvOptions& env) {
  auto opts = std::make_shared<EvaluateOpts>();
  CLI::App* cmd = app.add_subcommand(
      "evaluate", "Run one policy under one trajectory protocol");
  cmd->add_option("--input", opts->input, "Series CSV to evaluate on")
      ->required();
  cmd->add_option("--train", opts->train,
                  "Training CSV (calibrates merton/variance_budget)");
  cmd->add_option("--policy", opts->policy,
                  "glide_path | merton[:gamma] | variance_budget[:budget] | "
                  "dp:<table.csv> | rl:<checkpoint.json>")
      ->required();
  cmd->add_option("--protocol", opts->protocol,
                  "historical | simulated:<months,...> | bootstrap:<years,...>")
      ->required();
  cmd->add_option("--count", opts->count, "Trajectory count");
  cmd->add_option("--seed", opts->seed, "RNG seed");
  cmd->add_option("--gamma", opts->merton_gamma, "Merton risk aversion");
  cmd->add_option("--budget", opts->vb_budget, "Variance budget");
  cmd->add_option("--workers", opts->workers,
                  "Evaluation threads (results identical for any value)");
  cmd->add_option("--out", opts->out, "Report CSV")->required();
  cmd->add_option("--glide-out", opts->glide_out,
                  "Per-month mean action/wealth CSV");
  cmd->callback([opts, &env] {
    SeriesPtr series = load_canonical(opts->input);
    const PolicySpec spec = parse_policy_spec(opts->policy);

    LoadedPolicy loaded;
    gbwm_eval_options_default(&loaded.options);
    loaded.options.env = env.to_config();
    loaded.options.merton_gamma = opts->merton_gamma;
    loaded.options.vb_budget = opts->vb_budget;
    loaded.options.workers = opts->workers;
    if (spec.name == "merton" && !spec.arg.empty()) {
      loaded.options.merton_gamma = std::stod(spec.arg);
    }
    if (spec.name == "variance_budget" && !spec.arg.empty()) {
      loaded.options.vb_budget = std::stod(spec.arg);
    }
    if (spec.name == "merton" || spec.name == "variance_budget") {
      if (opts->train.empty()) {
        throw std::runtime_error("--train is required for " + spec.name);
      }
      loaded.train = load_canonical(opts->train);
      loaded.options.train = loaded.train.get();
    }
    if (spec.name == "dp") {
      gbwm_dp_table* t = nullptr;
      check(gbwm_dp_load(spec.arg.c_str(), &t));
      loaded.dp.reset(t);
      loaded.options.dp = loaded.dp.get();
    }
    if (spec.name == "rl") {
      gbwm_policy* p = nullptr;
      check(gbwm_policy_load(spec.arg.c_str(), &p));
      loaded.rl.reset(p);
      loaded.options.rl = loaded.rl.get();
    }

    Meta meta;
    meta.add("command", "evaluate").add("input", opts->input);
    env.describe(meta);
    meta.add("policy", opts->policy)
        .add("protocol", opts->protocol)
        .add("count", static_cast<long long>(opts->count))
        .add("seed", std::to_string(opts->seed));

    double success = 0.0;
    unsigned long episodes = 0;
    ensure_parent_dir(opts->out);
    if (!opts->glide_out.empty()) ensure_parent_dir(opts->glide_out);
    check(gbwm_evaluate(series.get(), spec.name.c_str(),
                        opts->protocol.c_str(), opts->count, opts->seed,
                        &loaded.options,
                        opts->glide_out.empty() ? nullptr : opts->glide_out.c_str(),
                        meta.c_str(), &success, &episodes));

    // One-row report; the same metadata rides along in the header.
    {
      std::ofstream out(opts->out);
      if (!out) throw std::runtime_error("cannot write file: " + opts->out);
      std::stringstream ss(meta.text);
      std::string line;
      while (std::getline(ss, line)) out << "# " << line << "\n";
      out << "strategy,protocol,episodes,success_rate\n";
      out << spec.name << "," << opts->protocol << "," << episodes << ","
          << fmt(success) << "\n";
      out.close();
      if (out.fail()) throw std::runtime_error("write failed: " + opts->out);
    }
    std::printf("%s on %s: success %.4f over %lu episodes\n",
                spec.name.c_str(), opts->protocol.c_str(), success, episodes);
  });
}

struct SweepOpts {
  std::string train, strategy, grid, protocol = "simulated:120", out;
  int count = 10000, workers = 1;
  unsigned long long seed = 7;
};

void setup_sweep(CLI::App& app, const EnvOptions& env) {
  auto opts = std::make_shared<SweepOpts>();
  CLI::App* cmd = app.add_subcommand(
      "sweep", "Sweep a benchmark parameter on training trajectories");
  cmd->add_option("--train", opts->train, "Training return CSV")->required();
  cmd->add_option("--strategy", opts->strategy, "mc (merton) | vb (variance_budget)")
      ->required();
  cmd->add_option("--grid", opts->grid, "Parameter grid as from:to:step")
      ->required();
  cmd->add_option("--protocol", opts->protocol, "Trajectory protocol");
  cmd->add_option("--count", opts->count, "Trajectory count");
  cmd->add_option("--seed", opts->seed, "RNG seed");
  cmd->add_option("--workers", opts->workers,
                  "Evaluation threads (results identical for any value)");
  cmd->add_option("--out", opts->out, "Sweep curve CSV")->required();
  cmd->callback([opts, &env] {
    SeriesPtr train = load_canonical(opts->train);
    std::string name = opts->strategy;
    if (name == "mc") name = "merton";
    if (name == "vb") name = "variance_budget";
    if (name != "merton" && name != "variance_budget") {
      throw std::runtime_error("unknown sweep strategy: " + opts->strategy);
    }
    double from = 0.0, to = 0.0, step = 0.0;
    if (std::sscanf(opts->grid.c_str(), "%lf:%lf:%lf", &from, &to, &step) != 3 ||
        step <= 0.0 || !(from < to)) {
      throw std::runtime_error("bad --grid, expected from:to:step: " +
                               opts->grid);
    }
    const int steps = static_cast<int>((to - from) / step + 1e-9) + 1;
    const double hi = from + step * (steps - 1);

    gbwm_eval_options options;
    gbwm_eval_options_default(&options);
    options.env = env.to_config();
    options.train = train.get();
    options.workers = opts->workers;

    Meta meta;
    meta.add("command", "sweep").add("train", opts->train);
    env.describe(meta);
    meta.add("grid", opts->grid)
        .add("count", static_cast<long long>(opts->count))
        .add("seed", std::to_string(opts->seed));

    double best_param = 0.0, best_success = 0.0;
    ensure_parent_dir(opts->out);
    check(gbwm_sweep(train.get(), name.c_str(), opts->protocol.c_str(),
                     opts->count, opts->seed, &options, from, hi, steps,
                     opts->out.c_str(), meta.c_str(), &best_param,
                     &best_success));
    std::printf("best %s parameter %s (success %.4f), curve in %s\n",
                name.c_str(), fmt(best_param).c_str(), best_success,
                opts->out.c_str());
  });
}

struct TableOpts {
  std::string train, test, dp_table, rl_checkpoint, out;
  int count = 10000, workers = 1;
  unsigned long long seed = 7;
  double merton_gamma = 0.004, vb_budget = 0.013;
  bool all = false;
};

void setup_table(CLI::App& app, const EnvOptions& env) {
  auto opts = std::make_shared<TableOpts>();
  CLI::App* cmd = app.add_subcommand(
      "table", "Success-rate table: strategies x protocols");
  cmd->add_option("--train", opts->train, "Training return CSV")->required();
  cmd->add_option("--test", opts->test, "Test return CSV")->required();
  cmd->add_option("--count", opts->count, "Trajectories per protocol");
  cmd->add_option("--seed", opts->seed, "RNG seed");
  cmd->add_option("--gamma", opts->merton_gamma, "Merton risk aversion");
  cmd->add_option("--budget", opts->vb_budget, "Variance budget");
  cmd->add_option("--workers", opts->workers,
                  "Evaluation threads (results identical for any value)");
  cmd->add_option("--dp-table", opts->dp_table, "Solved DP table CSV");
  cmd->add_option("--rl-checkpoint", opts->rl_checkpoint,
                  "Trained policy checkpoint JSON");
  cmd->add_flag("--all", opts->all,
                "Require all five strategies (fails without both artifacts)");
  cmd->add_option("--out", opts->out, "Output table CSV")->required();
  cmd->callback([opts, &env] {
    if (opts->all && (opts->dp_table.empty() || opts->rl_checkpoint.empty())) {
      throw std::runtime_error(
          "--all needs both --dp-table and --rl-checkpoint");
    }
    SeriesPtr train = load_canonical(opts->train);
    SeriesPtr test = load_canonical(opts->test);
    DpPtr dp;
    PolicyPtr rl;
    gbwm_eval_options options;
    gbwm_eval_options_default(&options);
    options.env = env.to_config();
    options.train = train.get();
    options.merton_gamma = opts->merton_gamma;
    options.vb_budget = opts->vb_budget;
    options.workers = opts->workers;
    if (!opts->dp_table.empty()) {
      gbwm_dp_table* t = nullptr;
      check(gbwm_dp_load(opts->dp_table.c_str(), &t));
      dp.reset(t);
      options.dp = dp.get();
    }
    if (!opts->rl_checkpoint.empty()) {
      gbwm_policy* p = nullptr;
      check(gbwm_policy_load(opts->rl_checkpoint.c_str(), &p));
      rl.reset(p);
      options.rl = rl.get();
    }

    Meta meta;
    meta.add("command", "table")
        .add("train", opts->train)
        .add("test", opts->test);
    env.describe(meta);
    meta.add("count", static_cast<long long>(opts->count))
        .add("seed", std::to_string(opts->seed))
        .add("merton_gamma", opts->merton_gamma)
        .add("vb_budget", opts->vb_budget);
    if (!opts->dp_table.empty()) meta.add("dp_table", opts->dp_table);
    if (!opts->rl_checkpoint.empty()) {
      meta.add("rl_checkpoint", opts->rl_checkpoint);
    }

    ensure_parent_dir(opts->out);
    check(gbwm_table(test.get(), &options, opts->count, opts->seed,
                     opts->out.c_str(), meta.c_str()));
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

struct PolicyGridOpts {
  std::string checkpoint, out;
  unsigned long t_steps = 121, w_steps = 201;
  double w_max = 2.0;
};

void setup_policy_grid(CLI::App& app, const EnvOptions&) {
  auto opts = std::make_shared<PolicyGridOpts>();
  CLI::App* cmd = app.add_subcommand(
      "policy-grid", "Export deterministic actions on a (t/T, W/W_G) lattice");
  cmd->add_option("--checkpoint", opts->checkpoint, "Policy checkpoint JSON")
      ->required();
  cmd->add_option("--t-steps", opts->t_steps, "Grid points along t/T");
  cmd->add_option("--w-steps", opts->w_steps, "Grid points along W/W_G");
  cmd->add_option("--w-max", opts->w_max, "Largest wealth ratio on the grid");
  cmd->add_option("--out", opts->out, "Output CSV")->required();
  cmd->callback([opts] {
    gbwm_policy* p = nullptr;
    check(gbwm_policy_load(opts->checkpoint.c_str(), &p));
    PolicyPtr policy(p);
    Meta meta;
    meta.add("command", "policy-grid")
        .add("checkpoint", opts->checkpoint)
        .add("t_steps", static_cast<long long>(opts->t_steps))
        .add("w_steps", static_cast<long long>(opts->w_steps))
        .add("w_max", opts->w_max);
    ensure_parent_dir(opts->out);
    check(gbwm_policy_grid_csv(policy.get(), opts->t_steps, opts->w_steps,
                               opts->w_max, opts->out.c_str(), meta.c_str()));
    std::printf("wrote %s\n", opts->out.c_str());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-based wealth management research harness"};
  app.option_defaults()->always_capture_default();
  app.allow_config_extras(false);
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", gbwm_version());
  app.set_config("--config", "",
                 "Config file (key=value, [subcommand] sections; flags win)")
      ->envname("GBWM_CONFIG");

  EnvOptions env;
  env.register_options(app);

  setup_ingest(app, env);
  setup_simulate(app, env);
  setup_dp_solve(app, env);
  setup_train(app, env);
  setup_evaluate(app, env);
  setup_sweep(app, env);
  setup_table(app, env);
  setup_policy_grid(app, env);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
