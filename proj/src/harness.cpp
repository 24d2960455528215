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

#include "mfac/harness.hpp"

#include "mfac/error.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace mfac {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent streams derived from the run seed.
enum Stream : std::uint64_t {
  kStreamEnsemble = 1,
  kStreamSampler = 2,
  kStreamRestart = 3,
  kStreamPolicy = 4,
  kStreamNoise = 5,
  kStreamDistance = 6,
};

std::uint64_t stream_seed(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  Rng rng(seq);
  return rng();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

BenchmarkMdp mdp_from_config(const ExperimentConfig& cfg) {
  if (!cfg.mdp_path.empty()) return {cfg.mdp_path, load_mdp(cfg.mdp_path), std::nullopt};
  if (cfg.random_states > 0) {
    Rng rng(cfg.random_seed);
    return {"random", random_mdp(cfg.random_states, cfg.random_actions, cfg.random_gamma, rng),
            std::nullopt};
  }
  return benchmark_mdp(cfg.benchmark);
}

namespace {

double resolve_b_beta(const ExperimentConfig& cfg, const BenchmarkMdp& bench) {
  if (cfg.ensemble.b_beta > 0.0) return cfg.ensemble.b_beta;
  if (bench.spec) return bench.spec->b_beta;
  const double r_max = bench.mdp.reward().maxCoeff();
  return r_max > 0.0 ? 4.0 * r_max / (1.0 - bench.mdp.gamma()) : 1.0;
}

Policy initial_policy(const ExperimentConfig& cfg, const TabularMdp& mdp,
                      const Policy& pi_star) {
  const std::string& how = cfg.policy_init;
  if (how == "uniform") return Policy::uniform(mdp.n_states(), mdp.n_actions());
  if (how == "optimal") return pi_star;
  if (how == "random") {
    Rng rng(stream_seed(cfg.seed, kStreamPolicy));
    return random_policy(mdp.n_states(), mdp.n_actions(), rng);
  }
  if (how.rfind("file:", 0) == 0) {
    Policy p = load_policy(how.substr(5));
    if (p.n_states() != mdp.n_states() || p.n_actions() != mdp.n_actions())
      throw InputError("initial policy shape does not match the mdp");
    return p;
  }
  throw InputError("unknown policy_init '" + how + "'");
}

RunResult run_core(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const BenchmarkMdp bench = mdp_from_config(cfg);
  const TabularMdp& mdp = bench.mdp;
  const Table base = load_base_distribution(cfg.base_path, mdp.n_states(), mdp.n_actions());

  const Policy pi_star = optimal_policy(mdp);
  Policy pi = initial_policy(cfg, mdp, pi_star);

  RunResult out;
  out.initial_policy = pi;
  RunHeader& h = out.header;
  h.mdp_name = bench.name;
  h.n_states = mdp.n_states();
  h.n_actions = mdp.n_actions();
  h.gamma = mdp.gamma();
  h.j_star = expected_return(mdp, pi_star);
  h.q_star_sup = exact_q(mdp, pi_star).cwiseAbs().maxCoeff();
  const VisitationMeasure vis_star =
      visitation(mdp, pi_star, product_with_policy(mdp.initial_dist(), pi_star));
  h.zeta = kl_weighted(pi_star, pi, vis_star.state_marginal());
  try {
    h.kappa = concentrability(vis_star, base);
  } catch (const DomainError&) {
    h.kappa = std::numeric_limits<double>::infinity();
  }

  const bool td_only = cfg.mode == RunMode::kTdFixedPolicy;
  const double eps = td_only ? 0.0 : cfg.actor.eps_actor;
  const double eps_prime = cfg.resolved_eps_prime();
  const bool actor_on = eps > 0.0;
  const bool use_ensemble = cfg.mode != RunMode::kMfPpoExact && !cfg.oracle_critic;
  const double dt = eps > 0.0 ? eps : eps_prime;
  const long K = cfg.resolved_iterations();
  h.eps = eps;
  h.eps_prime = eps_prime;
  h.iterations = K;
  h.threshold = std::numeric_limits<double>::infinity();

  std::optional<ParticleEnsemble> ens;
  std::optional<RestartMonitor> monitor;
  Eigen::MatrixXd ref_sample;
  const InitMode init_mode = cfg.ensemble.antithetic ? InitMode::kAntithetic : InitMode::kIid;
  const std::uint64_t distance_seed = stream_seed(cfg.seed, kStreamDistance);
  if (use_ensemble) {
    ens = init_ensemble(cfg.ensemble.m, mdp.input_dim(), stream_seed(cfg.seed, kStreamEnsemble),
                        cfg.ensemble.alpha, resolve_b_beta(cfg, bench), init_mode);
    ref_sample = ens->particles;
    if (cfg.restart.enabled) {
      RestartPolicy rp;
      rp.check_every = cfg.restart.check_every;
      rp.estimator = cfg.restart.estimator;
      rp.init_mode = init_mode;
      rp.seed = stream_seed(cfg.seed, kStreamRestart);
      rp.ref_sample = ref_sample;
      if (cfg.restart.threshold > 0.0) {
        rp.threshold = cfg.restart.threshold;
      } else {
        h.noise_floor = measure_noise_floor(cfg.ensemble.m, ens->param_dim(),
                                            stream_seed(cfg.seed, kStreamNoise),
                                            cfg.restart.estimator, init_mode);
        rp.threshold = cfg.restart.threshold_factor * cfg.ensemble.alpha * h.noise_floor;
      }
      h.threshold = rp.threshold;
      monitor.emplace(std::move(rp));
    }
  }
  const bool log_w2 = use_ensemble && (cfg.restart.enabled || cfg.track_w2);
  Rng sampler_rng(stream_seed(cfg.seed, kStreamSampler));
  TdConfig td = cfg.td;
  td.eps_prime = eps_prime;

  std::optional<Weighting> weighting;
  double j_now = 0.0;
  double gap_sum = 0.0;
  for (long k = 0;; ++k) {
    if (k == 0 || actor_on) {
      weighting = weighting_distribution(mdp, pi, base);
      j_now = expected_return(mdp, pi);
    }
    const double gap = h.j_star - j_now;
    const bool need_exact = !use_ensemble || k % cfg.metrics_every == 0 || k == K;
    Table q_exact;
    if (need_exact) q_exact = exact_q(mdp, pi);
    Table q_now;
    if (use_ensemble) {
      if (actor_on || k % cfg.metrics_every == 0 || k == K) q_now = q_table_from_ensemble(*ens, mdp);
    } else {
      q_now = q_exact;
    }

    if (k % cfg.metrics_every == 0 || k == K) {
      MetricsRow row;
      row.k = k;
      row.t = static_cast<double>(k) * dt;
      row.j = j_now;
      row.gap = gap;
      row.avg_gap = k == 0 ? gap : gap_sum / static_cast<double>(k);
      row.policy_eval_error = policy_eval_error(q_now, q_exact, weighting->eval.weights);
      row.msbe = msbe(mdp, pi, q_now, weighting->sampling);
      row.tilde_w2 = log_w2 ? tilde_w2(*ens, ref_sample, cfg.restart.estimator, distance_seed)
                            : kNaN;
      row.restart_count = monitor ? monitor->restarts() : 0;
      if (cfg.record_wall_time)
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started)
                          .count();
      out.rows.push_back(row);
      out.row_drift.push_back(monitor ? monitor->drift_since_check() : 0.0);
    }
    if (k == K) break;
    gap_sum += gap;

    try {
      if (use_ensemble && eps_prime > 0.0) {
        const TdTarget target = make_td_target(mdp, pi, weighting->sampling);
        TdStepStats stats;
        if (td.mode == TdMode::kExpected) {
          stats = expected_td_step(*ens, mdp, target, eps_prime);
        } else {
          const TransitionSampler sampler(mdp, pi, weighting->sampling);
          stats = stochastic_td_step(*ens, mdp, target, sampler, td, sampler_rng);
        }
        if (monitor) {
          monitor->record_step(ens->alpha, stats.max_displacement);
          monitor->check(*ens, k + 1, static_cast<double>(k + 1) * dt);
        }
      }
      if (actor_on) pi = df_ppo_step(pi, q_now, eps);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
    } catch (const InvariantViolation& e) {
      throw InvariantViolation("iteration " + std::to_string(k) + ": " + e.what());
    }
  }

  out.final_avg_gap = gap_sum / static_cast<double>(K);
  out.bound_residual =
      eps > 0.0 ? h.zeta / (static_cast<double>(K) * eps) - out.final_avg_gap : kNaN;
  out.final_policy = pi;
  out.final_ensemble = ens;
  if (monitor) out.restart_events = monitor->events();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Benchmarks

std::vector<std::string> benchmark_names() { return {"bench5x3", "bench8x4", "bench20x5"}; }

BenchmarkMdp benchmark_mdp(const std::string& name) {
  if (name == "bench5x3") {
    GeneratedMdp g = generate_representable_mdp(5, 3, 0.8, 5003, 1.0);
    return {name, std::move(g.mdp), std::move(g.spec)};
  }
  if (name == "bench8x4") {
    Rng rng(8004);
    return {name, random_mdp(8, 4, 0.9, rng), std::nullopt};
  }
  if (name == "bench20x5") {
    Rng rng(20005);
    return {name, random_mdp(20, 5, 0.9, rng), std::nullopt};
  }
  throw InputError("unknown benchmark '" + name + "'");
}

Table load_base_distribution(const std::string& path, int n_states, int n_actions) {
  if (path.empty())
    return Table::Constant(n_states, n_actions, 1.0 / (static_cast<double>(n_states) * n_actions));
  std::ifstream in(path);
  if (!in) throw InputError("cannot open base distribution " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != n_states) throw InputError("base distribution rows");
    Table t(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
      if (static_cast<int>(rows[s].size()) != n_actions)
        throw InputError("base distribution columns");
      for (int a = 0; a < n_actions; ++a) t(s, a) = rows[s][a];
    }
    if ((t.array() < 0.0).any() || std::abs(t.sum() - 1.0) > 1e-10)
      throw InputError("base distribution must be a probability table");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed base distribution: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Runs

RunResult run_experiment(const ExperimentConfig& cfg) { return run_core(cfg); }

RunResult run_two_timescale(ExperimentConfig cfg) {
  cfg.mode = RunMode::kTwoTimescale;
  return run_core(cfg);
}

RunResult run_mf_ppo_exact(ExperimentConfig cfg) {
  cfg.mode = RunMode::kMfPpoExact;
  return run_core(cfg);
}

RunResult run_td_fixed_policy(ExperimentConfig cfg) {
  cfg.mode = RunMode::kTdFixedPolicy;
  return run_core(cfg);
}

Theorem4Report theorem4_report(const RunResult& result) {
  Theorem4Report r;
  r.avg_gap = result.final_avg_gap;
  r.restarts = result.rows.empty() ? 0 : result.rows.back().restart_count;
  r.zeta = result.header.zeta;
  r.kappa = result.header.kappa;
  return r;
}

RestartScaling restart_scaling(const ExperimentConfig& cfg, const std::vector<double>& horizons) {
  if (horizons.size() < 2) throw InputError("restart scaling needs at least two horizons");
  RestartScaling out;
  for (double T : horizons) {
    ExperimentConfig c = cfg;
    c.actor.t_end = T;
    c.iterations = 0;
    const RunResult r = run_core(c);
    out.horizons.push_back(T);
    out.restarts.push_back(theorem4_report(r).restarts);
  }
  const auto n = static_cast<double>(horizons.size());
  double mt = 0.0, mn = 0.0;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    mt += out.horizons[i] / n;
    mn += out.restarts[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    sxy += (out.horizons[i] - mt) * (out.restarts[i] - mn);
    sxx += (out.horizons[i] - mt) * (out.horizons[i] - mt);
  }
  if (sxx == 0.0) throw InputError("restart scaling needs distinct horizons");
  out.slope = sxy / sxx;
  for (std::size_t i = 1; i < out.restarts.size(); ++i)
    if (out.restarts[i] < out.restarts[i - 1]) out.non_decreasing = false;
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

void apply_axis(ExperimentConfig& cfg, const std::string& name, double v) {
  if (name == "alpha") {
    cfg.ensemble.alpha = v;
  } else if (name == "eta") {
    if (!cfg.eta_preset.empty()) throw InputError("eta axis conflicts with eta_preset");
    cfg.td.eta = v;
    cfg.eps_prime.reset();
  } else if (name == "m") {
    cfg.ensemble.m = static_cast<int>(std::lround(v));
  } else if (name == "t_end") {
    cfg.actor.t_end = v;
    cfg.iterations = 0;
  } else if (name == "eps") {
    cfg.actor.eps_actor = v;
    cfg.iterations = 0;
  } else if (name == "seed") {
    cfg.seed = static_cast<std::uint64_t>(std::llround(v));
  } else {
    throw InputError("unknown sweep axis '" + name + "'");
  }
}

}  // namespace

std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                             int threads, const std::string& out_dir) {
  std::vector<SweepCell> cells;
  if (!axes.empty()) {
    std::vector<std::size_t> idx(axes.size(), 0);
    for (const auto& ax : axes)
      if (ax.values.empty()) throw InputError("sweep axis '" + ax.name + "' has no values");
    for (;;) {
      SweepCell cell;
      for (std::size_t a = 0; a < axes.size(); ++a) cell.values.push_back(axes[a].values[idx[a]]);
      cells.push_back(std::move(cell));
      std::size_t a = axes.size();
      while (a > 0) {
        --a;
        if (++idx[a] < axes[a].values.size()) break;
        idx[a] = 0;
        if (a == 0) goto done;
      }
    }
  }
done:
  std::vector<ExperimentConfig> configs;
  for (const auto& cell : cells) {
    ExperimentConfig c = base;
    for (std::size_t a = 0; a < axes.size(); ++a) apply_axis(c, axes[a].name, cell.values[a]);
    c.validate();
    configs.push_back(std::move(c));
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(cells.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        cells[i].result = run_core(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "cell_%04zu.csv", i);
      std::ofstream(std::filesystem::path(out_dir) / name) << metrics_csv(cells[i].result);
    }
    std::ofstream(std::filesystem::path(out_dir) / "summary.csv") << summary_csv(axes, cells);
  }
  return cells;
}

// ---------------------------------------------------------------------------
// CSV

std::string summary_csv(const std::vector<SweepAxis>& axes, const std::vector<SweepCell>& cells) {
  std::ostringstream os;
  os << "cell";
  for (const auto& ax : axes) os << ',' << ax.name;
  os << ",iterations,final_J,final_gap,avg_gap,policy_eval_error,msbe,restart_count,zeta,kappa\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const RunResult& r = cells[i].result;
    const MetricsRow& last = r.rows.back();
    os << i;
    for (double v : cells[i].values) os << ',' << fmt(v);
    os << ',' << r.header.iterations << ',' << fmt(last.j) << ',' << fmt(last.gap) << ','
       << fmt(r.final_avg_gap) << ',' << fmt(last.policy_eval_error) << ',' << fmt(last.msbe)
       << ',' << last.restart_count << ',' << fmt(r.header.zeta) << ',' << fmt(r.header.kappa)
       << '\n';
  }
  return os.str();
}

std::string metrics_csv(const RunResult& result) {
  const RunHeader& h = result.header;
  std::ostringstream os;
  os << "# mdp=" << h.mdp_name << " states=" << h.n_states << " actions=" << h.n_actions
     << " gamma=" << fmt(h.gamma) << " j_star=" << fmt(h.j_star) << " zeta=" << fmt(h.zeta)
     << " kappa=" << fmt(h.kappa) << " eps=" << fmt(h.eps) << " eps_prime=" << fmt(h.eps_prime)
     << " iterations=" << h.iterations << " threshold=" << fmt(h.threshold) << '\n';
  os << "# avg_gap(k) = (1/k) * sum_{j<k} gap(j), a left Riemann sum on the iteration grid;"
        " avg_gap(0) = gap(0)\n";
  os << "k,t,J,gap,avg_gap,policy_eval_error,msbe,tilde_w2,restart_count,wall_ms\n";
  for (const auto& r : result.rows)
    os << r.k << ',' << fmt(r.t) << ',' << fmt(r.j) << ',' << fmt(r.gap) << ','
       << fmt(r.avg_gap) << ',' << fmt(r.policy_eval_error) << ',' << fmt(r.msbe) << ','
       << fmt(r.tilde_w2) << ',' << r.restart_count << ',' << fmt(r.wall_ms) << '\n';
  return os.str();
}

std::string restart_events_csv(const RunResult& result) {
  std::ostringstream os;
  os << "step,t,tilde_w2,threshold,restart_index,drift_bound,restarted,post_restart_w2\n";
  for (const auto& e : result.restart_events)
    os << e.step << ',' << fmt(e.t) << ',' << fmt(e.tilde_w2) << ',' << fmt(e.threshold) << ','
       << e.restart_index << ',' << fmt(e.drift_bound) << ',' << (e.restarted ? 1 : 0) << ','
       << fmt(e.post_restart_w2) << '\n';
  return os.str();
}

void write_run_outputs(const RunResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name);
    if (!(out << text)) throw InputError("cannot write " + (dir / name).string());
  };
  write("metrics.csv", metrics_csv(result));
  write("restarts.csv", restart_events_csv(result));
  save_policy(result.final_policy, result.header.iterations, (dir / "policy.txt").string());
  if (result.final_ensemble) save_ensemble(*result.final_ensemble, (dir / "ensemble.txt").string());
}

}  // namespace mfac
