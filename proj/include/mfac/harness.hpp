// Copyright 2026 The mfac Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mfac/actor.hpp"
#include "mfac/critic.hpp"
#include "mfac/mdp.hpp"
#include "mfac/network.hpp"
#include "mfac/representable.hpp"
#include "mfac/wasserstein.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfac {

enum class RunMode { kTwoTimescale, kMfPpoExact, kTdFixedPolicy };

struct BenchmarkMdp {
  std::string name;
  TabularMdp mdp;
  std::optional<RepresentableSpec> spec;
};

/// Fixed seeded benchmarks: "bench5x3" (representable), "bench8x4", "bench20x5".
BenchmarkMdp benchmark_mdp(const std::string& name);
std::vector<std::string> benchmark_names();

struct EnsembleConfig {
  int m = 256;
  double alpha = 1.0;
  double b_beta = 0.0;  ///< 0 picks a default from the MDP (see resolve_b_beta)
  bool antithetic = true;
};

struct RestartConfig {
  bool enabled = false;
  double threshold = 0.0;         ///< on tilde W2; 0 means factor * alpha * noise floor
  double threshold_factor = 3.0;
  int check_every = 10;
  W2Estimator estimator = W2Estimator::kExact;
};

struct SweepAxis {
  std::string name;  ///< alpha | eta | m | t_end | eps | seed
  std::vector<double> values;
};

struct ExperimentConfig {
  RunMode mode = RunMode::kTwoTimescale;
  std::uint64_t seed = 0;

  // MDP source: exactly one of benchmark / mdp_path / random_* is used.
  std::string benchmark = "bench5x3";
  std::string mdp_path;
  int random_states = 0;  ///< > 0 selects a random MDP
  int random_actions = 0;
  double random_gamma = 0.9;
  std::uint64_t random_seed = 0;

  ActorConfig actor;
  TdConfig td;
  std::optional<double> eps_prime;  ///< explicit critic stepsize; else eta * eps
  std::string eta_preset;           ///< "" or "alpha^1.5"
  long iterations = 0;              ///< 0 derives K from t_end / eps

  EnsembleConfig ensemble;
  RestartConfig restart;

  std::string base_path;            ///< empty: uniform base distribution
  std::string policy_init = "uniform";  ///< uniform | random | optimal | file:<path>
  long metrics_every = 1;
  bool track_w2 = false;            ///< log tilde W2 at every row even without restarts
  bool oracle_critic = false;       ///< replace the ensemble by exact_q
  bool record_wall_time = false;
  std::string output_dir;
  std::vector<SweepAxis> sweep_axes;  ///< grid used by the sweep subcommand

  /// Throws InputError on inconsistent settings.
  void validate() const;
  /// eta after applying the preset.
  double resolved_eta() const;
  double resolved_eps_prime() const;
  long resolved_iterations() const;
};

/// The MDP named by the config's source fields.
BenchmarkMdp mdp_from_config(const ExperimentConfig& cfg);

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct MetricsRow {
  long k = 0;
  double t = 0.0;
  double j = 0.0;
  double gap = 0.0;
  double avg_gap = 0.0;  ///< (1/k) sum_{j<k} gap_j; gap_0 at k = 0
  double policy_eval_error = 0.0;
  double msbe = 0.0;
  double tilde_w2 = 0.0;  ///< NaN when not measured
  int restart_count = 0;
  double wall_ms = 0.0;
};

struct RunHeader {
  std::string mdp_name;
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.0;
  double j_star = 0.0;
  double q_star_sup = 0.0;  ///< max |Q^{pi*}|
  double zeta = 0.0;        ///< KL(pi* || pi_0) under the optimal state visitation
  double kappa = 0.0;
  double eps = 0.0;
  double eps_prime = 0.0;
  long iterations = 0;
  double threshold = 0.0;   ///< restart threshold, inf when disabled
  double noise_floor = 0.0; ///< alpha-free W2 noise floor used for the threshold
};

struct RunResult {
  RunHeader header;
  std::vector<MetricsRow> rows;
  std::vector<double> row_drift;  ///< alpha * displacement since the last check, per row
  std::vector<RestartEvent> restart_events;
  double final_avg_gap = 0.0;     ///< (1/K) sum_{k<K} gap_k
  double bound_residual = 0.0;    ///< zeta / T - final_avg_gap
  Policy initial_policy = Policy::uniform(1, 1);
  Policy final_policy = Policy::uniform(1, 1);
  std::optional<ParticleEnsemble> final_ensemble;
};

RunResult run_experiment(const ExperimentConfig& cfg);
RunResult run_two_timescale(ExperimentConfig cfg);
RunResult run_mf_ppo_exact(ExperimentConfig cfg);
RunResult run_td_fixed_policy(ExperimentConfig cfg);

struct Theorem4Report {
  double avg_gap = 0.0;
  int restarts = 0;
  double zeta = 0.0;
  double kappa = 0.0;
};

Theorem4Report theorem4_report(const RunResult& result);

struct RestartScaling {
  std::vector<double> horizons;
  std::vector<int> restarts;
  double slope = 0.0;  ///< least-squares slope of N against T
  bool non_decreasing = true;
};

RestartScaling restart_scaling(const ExperimentConfig& cfg, const std::vector<double>& horizons);

struct SweepCell {
  std::vector<double> values;  ///< one per axis
  RunResult result;
};

/// Cartesian product over the axes; no axes means no cells. Cells run on
/// `threads` workers. When `out_dir` is set, writes cell_<i>.csv files and
/// summary.csv.
std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                             int threads, const std::string& out_dir = "");

std::string summary_csv(const std::vector<SweepAxis>& axes, const std::vector<SweepCell>& cells);
std::string metrics_csv(const RunResult& result);
std::string restart_events_csv(const RunResult& result);
void write_run_outputs(const RunResult& result, const std::string& out_dir);

/// Uniform base table unless `path` names a JSON array of rows.
Table load_base_distribution(const std::string& path, int n_states, int n_actions);

}  // namespace mfac
