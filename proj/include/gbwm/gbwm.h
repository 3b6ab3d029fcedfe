#ifndef GBWM_H
#define GBWM_H

/* C interface to the goal-based wealth management library.
 *
 * All functions returning gbwm_status set a thread-local error message on
 * failure, readable via gbwm_last_error(). Handles are opaque; every *_free
 * accepts NULL. Functions that write files take `meta`, a string of
 * newline-separated key=value pairs echoed into the output header so results
 * stay self-describing (pass NULL or "" for none).
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gbwm_status {
  GBWM_OK = 0,
  GBWM_ERR_NULL_ARGUMENT = 1,
  GBWM_ERR_INVALID_ARGUMENT = 2,
  GBWM_ERR_RUNTIME = 3
} gbwm_status;

/* Message describing this thread's most recent failure; never NULL. */
const char* gbwm_last_error(void);
const char* gbwm_version(void);

/* ---- market data ---------------------------------------------------- */

typedef struct gbwm_series gbwm_series;

/* Loads a monthly return CSV. `date_col` names either a single YYYY-MM
 * column or, when it contains a comma (e.g. "year,month"), a split pair.
 * Pass NULL for the defaults date/bond_return/stock_return. Rows are sorted
 * by month and validated: consecutive months, returns > -1. */
gbwm_status gbwm_series_load(const char* path, const char* date_col,
                             const char* bond_col, const char* stock_col,
                             gbwm_series** out);

/* Writes the canonical year,month,bond_return,stock_return layout. */
gbwm_status gbwm_series_save(const gbwm_series* series, const char* path,
                             const char* meta);

/* Splits at the given month: months before it / from it on. */
gbwm_status gbwm_series_split(const gbwm_series* series, int year, int month,
                              gbwm_series** train_out, gbwm_series** test_out);

long gbwm_series_length(const gbwm_series* series);
gbwm_status gbwm_series_range(const gbwm_series* series, int* first_year,
                              int* first_month, int* last_year,
                              int* last_month);
void gbwm_series_free(gbwm_series* series);

/* ---- environment ---------------------------------------------------- */

typedef struct gbwm_env_config {
  int horizon;                 /* months per episode */
  double goal_wealth;
  double initial_wealth_ratio; /* W_0 as a fraction of the goal */
} gbwm_env_config;

void gbwm_env_config_default(gbwm_env_config* config);

/* ---- trajectory generation ------------------------------------------ */

/* Protocol strings: "historical", "simulated:36", "simulated:24,36,48",
 * "bootstrap:1", "bootstrap:1,2,3" (simulated windows in months, bootstrap
 * block lengths in years). Writes rows
 * trajectory_id,step,bond_return,stock_return. `count` is ignored for
 * historical, which emits every overlapping window. */
gbwm_status gbwm_generate_csv(const gbwm_series* series, const char* protocol,
                              int count, unsigned long long seed, int horizon,
                              const char* path, const char* meta);

/* Per-window moment estimates across the whole series (the dispersion the
 * rolling-window generator feeds on). */
gbwm_status gbwm_spread_csv(const gbwm_series* series, int window,
                            const char* path, const char* meta);

/* ---- dynamic programming benchmark ----------------------------------- */

typedef struct gbwm_dp_table gbwm_dp_table;

typedef struct gbwm_dp_config {
  int horizon;
  double goal_wealth;
  double initial_wealth;
  unsigned long grid_size;
  unsigned long alpha_count;
} gbwm_dp_config;

void gbwm_dp_config_default(gbwm_dp_config* config);

gbwm_status gbwm_dp_solve(const gbwm_series* train,
                          const gbwm_dp_config* config, gbwm_dp_table** out);
gbwm_status gbwm_dp_save(const gbwm_dp_table* table, const char* path,
                         const char* meta);
gbwm_status gbwm_dp_load(const char* path, gbwm_dp_table** out);
/* Success probability at the initial state (nearest grid node to W_0). */
gbwm_status gbwm_dp_initial_value(const gbwm_dp_table* table, double* out);
void gbwm_dp_free(gbwm_dp_table* table);

/* ---- PPO training ----------------------------------------------------- */

typedef struct gbwm_policy gbwm_policy;

typedef struct gbwm_ppo_config {
  gbwm_env_config env;
  double lr;
  int epochs;
  unsigned long minibatch_size;
  int episodes_per_batch;
  long total_episodes;
  double clip_epsilon;
  double value_coef;
  double entropy_coef;
  double discount;
  double gae_lambda;
  double kl_limit;
  int window;             /* rolling window for generated training paths */
  int eval_every_batches;
  int eval_episodes;
  unsigned long long seed;
  const unsigned* hidden_sizes; /* NULL -> two hidden layers of 6 */
  unsigned hidden_count;
} gbwm_ppo_config;

void gbwm_ppo_config_default(gbwm_ppo_config* config);

typedef void (*gbwm_progress_fn)(long episodes_seen, double success_rate,
                                 void* user);

/* Trains from scratch, writes the best-checkpoint JSON to `checkpoint_path`
 * and, when `curve_path` is non-NULL, the evaluation curve CSV. The trained
 * policy is also returned through `out` when non-NULL. */
gbwm_status gbwm_train(const gbwm_series* train, const gbwm_ppo_config* config,
                       const char* checkpoint_path, const char* curve_path,
                       const char* meta, gbwm_progress_fn progress, void* user,
                       gbwm_policy** out);

gbwm_status gbwm_policy_load(const char* path, gbwm_policy** out);
void gbwm_policy_free(gbwm_policy* policy);

/* Deterministic (mode) action at one observation. */
gbwm_status gbwm_policy_action(const gbwm_policy* policy, double t_frac,
                               double wealth_ratio, double* alpha_out);

/* Mode actions over a (t/T, W/W_G) lattice as t_frac,wealth_ratio,alpha. */
gbwm_status gbwm_policy_grid_csv(const gbwm_policy* policy,
                                 unsigned long t_steps, unsigned long w_steps,
                                 double w_max, const char* path,
                                 const char* meta);

/* ---- evaluation ------------------------------------------------------- */

/* Artifacts and parameters the strategies draw on. `train` calibrates the
 * closed-form strategies and is required for merton and variance_budget;
 * `dp` and `rl` are required by their strategies only. `workers` is the
 * evaluation thread count; results are identical for every value (work is
 * chunked by trajectory index and reduced in order). */
typedef struct gbwm_eval_options {
  gbwm_env_config env;
  const gbwm_series* train;
  double merton_gamma;
  double vb_budget;
  const gbwm_dp_table* dp;
  const gbwm_policy* rl;
  int workers;
} gbwm_eval_options;

void gbwm_eval_options_default(gbwm_eval_options* options);

/* Strategies: "glide_path", "merton", "variance_budget", "dp", "rl".
 * Trajectories are drawn from `series` (typically the test split). When
 * `glide_csv_path` is non-NULL, writes per-month mean action and mean
 * wealth rows (t,mean_alpha,mean_wealth). */
gbwm_status gbwm_evaluate(const gbwm_series* series, const char* strategy,
                          const char* protocol, int count,
                          unsigned long long seed,
                          const gbwm_eval_options* options,
                          const char* glide_csv_path, const char* meta,
                          double* success_out, unsigned long* episodes_out);

/* Sweeps merton (gamma) or variance_budget (budget) over `steps` evenly
 * spaced values in [lo, hi] on one trajectory set shared by every value;
 * ties prefer the smaller parameter. Parameters are chosen on the training
 * side, so `series` is typically the training split. Writes param,success
 * rows when csv_path is non-NULL. */
gbwm_status gbwm_sweep(const gbwm_series* series, const char* strategy,
                       const char* protocol, int count,
                       unsigned long long seed,
                       const gbwm_eval_options* options, double lo, double hi,
                       int steps, const char* csv_path, const char* meta,
                       double* best_param_out, double* best_success_out);

/* Success-rate table over the benchmark protocol set (historical, three
 * simulated, three bootstrap). Strategies missing their artifact are left
 * out. Rows: strategy, one column per protocol. */
gbwm_status gbwm_table(const gbwm_series* test,
                       const gbwm_eval_options* options, int count,
                       unsigned long long seed, const char* csv_path,
                       const char* meta);

#ifdef __cplusplus
}
#endif

#endif /* GBWM_H */
