#include "evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gbwm {

namespace {

// Work is handed out in fixed-size index chunks; every per-chunk result is
// combined in chunk order afterwards, so output does not depend on how many
// workers ran.
constexpr size_t kChunkSize = 256;

void run_chunks(size_t chunk_count, int workers,
                const std::function<void(size_t)>& chunk_fn) {
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  const size_t thread_count =
      std::min<size_t>(static_cast<size_t>(workers), chunk_count);
  if (thread_count <= 1) {
    for (size_t c = 0; c < chunk_count; ++c) chunk_fn(c);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(thread_count);
  for (size_t w = 0; w < thread_count; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t c = next.fetch_add(1);
        if (c >= chunk_count) return;
        try {
          chunk_fn(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

EvalProtocol EvalProtocol::parse(const std::string& text) {
  EvalProtocol proto;
  const size_t colon = text.find(':');
  const std::string head = text.substr(0, colon);
  if (head == "historical") {
    proto.kind = Kind::historical;
    if (colon != std::string::npos) {
      throw std::invalid_argument("historical takes no parameters");
    }
    return proto;
  }
  if (head == "simulated") {
    proto.kind = Kind::simulated;
  } else if (head == "bootstrap") {
    proto.kind = Kind::bootstrap;
  } else {
    throw std::invalid_argument("unknown protocol: " + text);
  }
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw std::invalid_argument(head + " needs parameters, e.g. " + head + ":36");
  }
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    const int v = std::stoi(item, &pos);
    if (pos != item.size() || v < 1) {
      throw std::invalid_argument("bad protocol parameter: " + item);
    }
    proto.params.push_back(v);
  }
  if (proto.params.empty()) {
    throw std::invalid_argument(head + " needs at least one parameter");
  }
  return proto;
}

std::string EvalProtocol::name() const {
  switch (kind) {
    case Kind::historical:
      return "historical";
    case Kind::simulated:
    case Kind::bootstrap: {
      std::string out = kind == Kind::simulated ? "simulated:" : "bootstrap:";
      for (size_t i = 0; i < params.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(params[i]);
      }
      return out;
    }
  }
  return "?";
}

std::vector<Trajectory> make_trajectories(const ReturnSeries& test,
                                          const EvalProtocol& protocol,
                                          int horizon, int workers) {
  if (protocol.kind == EvalProtocol::Kind::historical) {
    return historical_windows(test, horizon);
  }
  if (protocol.count < 1) throw std::invalid_argument("count must be >= 1");
  const size_t n = static_cast<size_t>(protocol.count);
  std::vector<int> block_months;
  if (protocol.kind == EvalProtocol::Kind::bootstrap) {
    block_months.reserve(protocol.params.size());
    for (int years : protocol.params) block_months.push_back(years * 12);
  }
  std::vector<Trajectory> out(n);
  const size_t chunk_count = (n + kChunkSize - 1) / kChunkSize;
  run_chunks(chunk_count, workers, [&](size_t c) {
    const size_t lo = c * kChunkSize;
    const size_t hi = std::min(n, lo + kChunkSize);
    for (size_t i = lo; i < hi; ++i) {
      Rng rng = Rng::substream(protocol.seed, static_cast<uint64_t>(i));
      if (protocol.kind == EvalProtocol::Kind::simulated) {
        out[i] = simulate_trajectory_mixed(test, protocol.params, horizon, rng);
      } else {
        out[i] = block_bootstrap_trajectory(test, block_months, horizon, rng);
      }
    }
  });
  return out;
}

EvalResult run_protocol(const Policy& policy, const EnvConfig& env_config,
                        std::span<const Trajectory> trajectories,
                        int workers) {
  if (trajectories.empty()) throw std::invalid_argument("no trajectories");
  const int T = env_config.horizon;
  const size_t n = trajectories.size();
  const size_t chunk_count = (n + kChunkSize - 1) / kChunkSize;

  struct ChunkSums {
    size_t successes = 0;
    std::vector<double> alpha;
    std::vector<double> wealth;
  };
  std::vector<ChunkSums> sums(chunk_count);

  run_chunks(chunk_count, workers, [&](size_t c) {
    ChunkSums& s = sums[c];
    s.alpha.assign(static_cast<size_t>(T), 0.0);
    s.wealth.assign(static_cast<size_t>(T) + 1, 0.0);
    GbwmEnv env(env_config);
    const size_t lo = c * kChunkSize;
    const size_t hi = std::min(n, lo + kChunkSize);
    for (size_t i = lo; i < hi; ++i) {
      EnvState state = env.reset(trajectories[i]);
      s.wealth[0] += state.wealth;
      double reward = 0.0;
      for (int t = 0; t < T; ++t) {
        const double alpha =
            std::clamp(policy.act(state, env.history()), 0.0, 1.0);
        s.alpha[static_cast<size_t>(t)] += alpha;
        const StepResult sr = env.step(alpha);
        state = sr.state;
        reward = sr.reward;
        s.wealth[static_cast<size_t>(t) + 1] += state.wealth;
      }
      if (reward > 0.5) ++s.successes;
    }
  });

  EvalResult result;
  result.episodes = n;
  result.mean_alpha.assign(static_cast<size_t>(T), 0.0);
  result.mean_wealth.assign(static_cast<size_t>(T) + 1, 0.0);
  size_t successes = 0;
  for (const ChunkSums& s : sums) {
    successes += s.successes;
    for (size_t t = 0; t < result.mean_alpha.size(); ++t) {
      result.mean_alpha[t] += s.alpha[t];
    }
    for (size_t t = 0; t < result.mean_wealth.size(); ++t) {
      result.mean_wealth[t] += s.wealth[t];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : result.mean_alpha) v *= inv_n;
  for (double& v : result.mean_wealth) v *= inv_n;
  result.success_rate = static_cast<double>(successes) * inv_n;
  return result;
}

SweepResult sweep_parameter(
    const std::function<std::unique_ptr<Policy>(double)>& make_policy,
    std::span<const double> params, const EnvConfig& env_config,
    std::span<const Trajectory> trajectories, int workers) {
  if (params.empty()) throw std::invalid_argument("no sweep parameters");
  SweepResult result;
  for (double param : params) {
    std::unique_ptr<Policy> policy = make_policy(param);
    const EvalResult eval =
        run_protocol(*policy, env_config, trajectories, workers);
    result.points.push_back({param, eval.success_rate});
    if (eval.success_rate > result.best_success) {
      result.best_success = eval.success_rate;
      result.best_param = param;
    }
  }
  return result;
}

MomentsSpread mean_estimate_spread(const ReturnSeries& series, int window) {
  if (window < 2) throw std::invalid_argument("window must be >= 2");
  const size_t w = static_cast<size_t>(window);
  if (series.size() < w) {
    throw std::invalid_argument("series shorter than window");
  }
  // `window` counts observations, so window == series length yields exactly
  // one estimate. One estimate per admissible window end.
  MomentsSpread spread;
  for (size_t k = w - 1; k < series.size(); ++k) {
    spread.end_months.push_back(series.months[k]);
    spread.window_moments.push_back(estimate_moments(series, k + 1 - w, k + 1));
  }
  double mean = 0.0;
  spread.mu_stock_min = spread.window_moments.front().mu[1];
  spread.mu_stock_max = spread.mu_stock_min;
  for (const Moments& m : spread.window_moments) {
    mean += m.mu[1];
    spread.mu_stock_min = std::min(spread.mu_stock_min, m.mu[1]);
    spread.mu_stock_max = std::max(spread.mu_stock_max, m.mu[1]);
  }
  mean /= static_cast<double>(spread.window_moments.size());
  double ss = 0.0;
  for (const Moments& m : spread.window_moments) {
    const double d = m.mu[1] - mean;
    ss += d * d;
  }
  const size_t count = spread.window_moments.size();
  spread.mu_stock_std =
      count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
  return spread;
}

std::vector<EvalProtocol> default_protocols(int count, uint64_t seed) {
  const std::vector<std::string> names = {
      "historical",       "simulated:36", "simulated:24,36,48",
      "simulated:60",     "bootstrap:1",  "bootstrap:1,2,3",
      "bootstrap:4,5,6"};
  std::vector<EvalProtocol> protocols;
  protocols.reserve(names.size());
  for (size_t j = 0; j < names.size(); ++j) {
    EvalProtocol proto = EvalProtocol::parse(names[j]);
    proto.count = count;
    proto.seed = derive_seed(seed, 1000 + j);
    protocols.push_back(std::move(proto));
  }
  return protocols;
}

TableResult build_table(const ReturnSeries& test, const TableSpec& spec) {
  if (spec.protocols.empty()) throw std::invalid_argument("no protocols");
  TableResult table;
  for (const EvalProtocol& proto : spec.protocols) {
    table.protocol_names.push_back(proto.name());
  }

  std::vector<std::pair<std::string, std::function<std::unique_ptr<Policy>()>>>
      strategies;
  strategies.emplace_back("glide_path",
                          [&] { return make_glide_path(spec.env.horizon); });
  strategies.emplace_back("merton",
                          [&] { return make_merton(spec.ctx, spec.merton_gamma); });
  strategies.emplace_back("variance_budget", [&] {
    return make_variance_budget(spec.ctx, spec.vb_budget);
  });
  if (spec.dp != nullptr) {
    strategies.emplace_back("dp", [&] { return make_dp(*spec.dp); });
  }
  if (spec.rl != nullptr) {
    strategies.emplace_back("rl", [&] { return make_rl(*spec.rl); });
  }

  for (const auto& [name, make] : strategies) {
    table.strategy_names.push_back(name);
  }
  table.success.assign(strategies.size(),
                       std::vector<double>(spec.protocols.size(), 0.0));

  for (size_t j = 0; j < spec.protocols.size(); ++j) {
    const std::vector<Trajectory> trajectories = make_trajectories(
        test, spec.protocols[j], spec.env.horizon, spec.workers);
    table.episode_counts.push_back(trajectories.size());
    for (size_t s = 0; s < strategies.size(); ++s) {
      std::unique_ptr<Policy> policy = strategies[s].second();
      table.success[s][j] =
          run_protocol(*policy, spec.env, trajectories, spec.workers)
              .success_rate;
    }
  }
  return table;
}

void save_table_csv(const TableResult& table, const std::string& path,
                    const MetaList& meta) {
  MetaList all = meta;
  for (size_t j = 0; j < table.protocol_names.size(); ++j) {
    all.emplace_back("episodes." + table.protocol_names[j],
                     std::to_string(table.episode_counts[j]));
  }
  CsvWriter writer(path, all);
  std::vector<std::string> header{"strategy"};
  header.insert(header.end(), table.protocol_names.begin(),
                table.protocol_names.end());
  writer.header(header);
  for (size_t s = 0; s < table.strategy_names.size(); ++s) {
    std::vector<std::string> row{table.strategy_names[s]};
    for (double v : table.success[s]) row.push_back(format_double(v));
    writer.row(row);
  }
  writer.close();
}

}  // namespace gbwm
