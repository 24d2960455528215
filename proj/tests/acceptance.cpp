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

// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include "mfac/actor.hpp"
#include "mfac/critic.hpp"
#include "mfac/harness.hpp"
#include "mfac/mdp.hpp"
#include "mfac/network.hpp"
#include "mfac/representable.hpp"
#include "mfac/wasserstein.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace {

using mfac::Policy;
using mfac::Rng;
using mfac::TabularMdp;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> flat(const mfac::Table& t) {
  std::vector<double> v;
  for (int s = 0; s < t.rows(); ++s)
    for (int a = 0; a < t.cols(); ++a) v.push_back(t(s, a));
  return v;
}

// 1. Exact oracles against truncated series.
Outcome oracle_exactness() {
  Rng rng(20261016);
  std::uniform_real_distribution<double> ug(0.5, 0.95);
  double bellman = 0.0, vis = 0.0, pdl = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int S = 2 + i % 19, A = 1 + (i / 19 + i) % 5;
    const TabularMdp mdp = mfac::random_mdp(S, A, ug(rng), rng);
    const Policy a = mfac::random_policy(S, A, rng);
    const Policy b = mfac::random_policy(S, A, rng);

    const std::vector<double> q = flat(mfac::exact_q(mdp, a));
    for (int s = 0; s < S; ++s)
      for (int u = 0; u < A; ++u) {
        double next = 0.0;
        for (int s2 = 0; s2 < S; ++s2)
          for (int u2 = 0; u2 < A; ++u2)
            next += mdp.transition()(s * A + u, s2) * oracle::prob(a, s2, u2) * q[s2 * A + u2];
        bellman = std::max(bellman,
                           std::abs(q[s * A + u] - mdp.reward()(s, u) - mdp.gamma() * next));
      }

    std::vector<double> d0(S);
    for (int s = 0; s < S; ++s) d0[s] = mdp.initial_dist()(s);
    std::vector<double> start = oracle::product_start(mdp, a, d0);
    // Alternate with an arbitrary pair distribution as the start.
    if (i % 2) {
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      double tot = 0.0;
      for (auto& x : start) tot += (x = u01(rng));
      for (auto& x : start) x /= tot;
    }
    mfac::Table start_t(S, A);
    for (int s = 0; s < S; ++s)
      for (int u = 0; u < A; ++u) start_t(s, u) = start[s * A + u];
    const std::vector<double> lib = flat(mfac::visitation(mdp, a, start_t).weights);
    const std::vector<double> ref = oracle::visitation_series(mdp, a, start);
    for (std::size_t p = 0; p < ref.size(); ++p) vis = std::max(vis, std::abs(lib[p] - ref[p]));

    pdl = std::max(pdl, std::abs(mfac::perf_diff(mdp, a, b) -
                                 (oracle::j_series(mdp, a) - oracle::j_series(mdp, b))));
  }
  return {bellman <= 1e-10 && vis <= 1e-8 && pdl <= 1e-8,
          "bellman " + fmt("%.2e", bellman) + " (<=1e-10), visitation " + fmt("%.2e", vis) +
              " (<=1e-8), perf-diff " + fmt("%.2e", pdl) + " (<=1e-8) on 100 MDPs"};
}

// 2. Analytic gradient of sigma against Richardson-extrapolated central differences.
Outcome gradient_correctness() {
  Rng rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.5, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int d = 2 + i % 9;
    Eigen::VectorXd theta(d + 2), x(d + 1);
    for (int k = 0; k < d + 2; ++k) theta(k) = normal(rng);
    for (int k = 0; k < d; ++k) x(k) = normal(rng);
    x.head(d) *= std::min(1.0, 0.999 / x.head(d).norm());
    x(d) = 1.0;
    const double bb = unif(rng);
    auto sigma = [&](const Eigen::VectorXd& t) {
      return bb * std::tanh(t(0)) * std::tanh(t.tail(d + 1).dot(x));
    };
    auto central = [&](int k, double h) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      return (sigma(tp) - sigma(tm)) / (2.0 * h);
    };
    Eigen::VectorXd fd(d + 2);
    for (int k = 0; k < d + 2; ++k) {
      const double h = 1e-3;
      fd(k) = (4.0 * central(k, h / 2) - central(k, h)) / 3.0;
    }
    const Eigen::VectorXd g = mfac::grad_sigma(theta, x, bb);
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  return {worst <= 1e-6, "max relative error " + fmt("%.2e", worst) + " over 1000 points (<=1e-6)"};
}

// 3. Exact-Q PPO against the Theorem 1 style bound and the T-doubling ratio.
Outcome theorem1_form() {
  bool ok = true;
  double worst_ratio = 0.0, min_slack = std::numeric_limits<double>::infinity(), riemann = 0.0,
         min_gap = 0.0, zeta_err = 0.0, j_err = 0.0;
  for (const auto& name : mfac::benchmark_names()) {
    const mfac::BenchmarkMdp bench = mfac::benchmark_mdp(name);
    const TabularMdp& mdp = bench.mdp;
    const Policy star = mfac::optimal_policy(mdp);
    double q_sup = 0.0;
    for (double v : oracle::q_series(mdp, star)) q_sup = std::max(q_sup, std::abs(v));
    std::vector<double> d0(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) d0[s] = mdp.initial_dist()(s);
    const std::vector<double> vis_star =
        oracle::visitation_series(mdp, star, oracle::product_start(mdp, star, d0));
    const double j_star = oracle::j_series(mdp, star);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      mfac::ExperimentConfig cfg;
      cfg.benchmark = name;
      cfg.seed = seed;
      cfg.policy_init = "random";
      cfg.actor.eps_actor = 1e-2;
      cfg.actor.t_end = 50.0;
      const mfac::RunResult r = mfac::run_mf_ppo_exact(cfg);
      const long K = r.header.iterations;

      // zeta from the oracle visitation.
      const Policy& pi0 = r.initial_policy;
      double zeta = 0.0;
      const int A = mdp.n_actions();
      for (int s = 0; s < mdp.n_states(); ++s) {
        double marg = 0.0, kl = 0.0;
        for (int a = 0; a < A; ++a) {
          marg += vis_star[s * A + a];
          kl += oracle::prob(star, s, a) * (star.log_probs()(s, a) - pi0.log_probs()(s, a));
        }
        zeta += marg * kl;
      }
      zeta_err = std::max(zeta_err, std::abs(zeta - r.header.zeta));

      // Left-Riemann time average recomputed from the logged gaps.
      double acc = 0.0;
      for (const auto& row : r.rows) {
        const double avg = row.k == 0 ? row.gap : acc / row.k;
        riemann = std::max(riemann, std::abs(avg - row.avg_gap));
        acc += row.gap;
        min_gap = std::min(min_gap, row.gap);
      }
      j_err = std::max(j_err, std::abs(oracle::j_series(mdp, r.final_policy) - r.rows.back().j));
      j_err = std::max(j_err, std::abs(j_star - r.header.j_star));

      const double avg_T = r.rows[K].avg_gap;
      const double avg_half = r.rows[K / 2].avg_gap;
      const double T = K * cfg.actor.eps_actor;
      const double bound = zeta / T + 10.0 * cfg.actor.eps_actor * q_sup;
      min_slack = std::min(min_slack, bound - avg_T);
      worst_ratio = std::max(worst_ratio, avg_T / avg_half);
      if (avg_T > bound || avg_T / avg_half > 0.75) ok = false;
    }
  }
  ok = ok && riemann <= 1e-12 && min_gap >= -1e-9 && zeta_err <= 1e-8 && j_err <= 1e-9;
  return {ok, "min bound slack " + fmt("%.3e", min_slack) + ", worst T/(T/2) ratio " +
                  fmt("%.3f", worst_ratio) + " (<=0.75), riemann " + fmt("%.1e", riemann) +
                  ", min gap " + fmt("%.1e", min_gap) + ", zeta/J oracle " +
                  fmt("%.1e", std::max(zeta_err, j_err)) + ", 15 runs"};
}

// 4. Fixed-policy expected TD on the 5-state benchmark.
Outcome td_convergence() {
  constexpr long kBudget = 2000;  // pilot-calibrated, eps' = 0.01
  mfac::ExperimentConfig cfg;
  cfg.benchmark = "bench5x3";
  cfg.seed = 4;
  cfg.policy_init = "random";
  cfg.ensemble.m = 256;
  cfg.ensemble.antithetic = true;
  cfg.eps_prime = 0.01;
  cfg.iterations = kBudget;
  const mfac::RunResult r = mfac::run_td_fixed_policy(cfg);
  std::vector<double> err;
  for (const auto& row : r.rows) err.push_back(row.policy_eval_error);
  double worst_rise = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 100 < err.size(); ++k)
    worst_rise = std::max(worst_rise, err[k + 100] - err[k]);
  double worst_step = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < err.size(); ++k)
    worst_step = std::max(worst_step, err[k + 1] - err[k]);

  // Final error recomputed from the particles.
  const mfac::BenchmarkMdp bench = mfac::benchmark_mdp("bench5x3");
  const std::vector<double> q = oracle::q_from_particles(*r.final_ensemble, bench.mdp);
  const std::vector<double> qs = oracle::q_series(bench.mdp, r.final_policy);
  const std::vector<double> base(bench.mdp.n_pairs(), 1.0 / bench.mdp.n_pairs());
  const std::vector<double> w = oracle::eval_weighting(bench.mdp, r.final_policy, base);
  double e2 = 0.0;
  for (std::size_t p = 0; p < q.size(); ++p) e2 += w[p] * (q[p] - qs[p]) * (q[p] - qs[p]);
  const double oracle_final = std::sqrt(e2);
  const double ratio = err.back() / err.front();
  const bool ok = worst_rise <= 1e-9 && ratio <= 0.05 &&
                  std::abs(oracle_final - err.back()) <= 1e-9 + 1e-6 * err.back();
  return {ok, "final/initial " + fmt("%.3e", ratio) + " (<=0.05) after " +
                  std::to_string(kBudget) + " steps, max 100-step rise " +
                  fmt("%.2e", worst_rise) + " (<=1e-9), max one-step rise " +
                  fmt("%.2e", worst_step) + ", oracle final " + fmt("%.3e", oracle_final)};
}

// 5. Two-timescale ordering of eta = 64 against eta = 1.
Outcome two_timescale_ordering() {
  int wins = 0;
  std::string pairs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double gap[2];
    const double etas[2] = {64.0, 1.0};
    for (int i = 0; i < 2; ++i) {
      mfac::ExperimentConfig cfg;
      cfg.benchmark = "bench5x3";
      cfg.seed = seed;
      cfg.ensemble.m = 256;
      cfg.ensemble.alpha = 16.0;
      cfg.actor.eps_actor = 1.0 / 640.0;  // eps' = 0.1 at eta = 64
      cfg.actor.t_end = 20.0;
      cfg.td.eta = etas[i];
      cfg.metrics_every = 1000000;
      gap[i] = mfac::run_two_timescale(cfg).final_avg_gap;
    }
    if (gap[0] <= gap[1]) ++wins;
    pairs += fmt(" %.4f", gap[0]) + fmt("/%.4f", gap[1]);
  }
  return {wins >= 4, std::to_string(wins) + "/5 pairs with gap(eta=64) <= gap(eta=1):" + pairs};
}

// 6. Restart mechanism bounds, restart counts over T and inertness at +inf.
Outcome restart_mechanism() {
  mfac::ExperimentConfig cfg;
  cfg.benchmark = "bench5x3";
  cfg.seed = 3;
  cfg.ensemble.m = 64;
  cfg.ensemble.alpha = 1.0;
  cfg.actor.eps_actor = 0.01;
  cfg.td.eta = 90.0;
  cfg.td.mode = mfac::TdMode::kStochastic;
  cfg.restart.enabled = true;
  cfg.restart.check_every = 10;
  cfg.restart.threshold_factor = 3.0;

  bool ok = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
  std::vector<double> Ts = {10.0, 20.0, 40.0}, Ns;
  int restarted_events = 0;
  for (double T : Ts) {
    mfac::ExperimentConfig c = cfg;
    c.actor.t_end = T;
    const mfac::RunResult r = mfac::run_two_timescale(c);
    const double thr = r.header.threshold;
    if (std::abs(thr - 3.0 * c.ensemble.alpha * r.header.noise_floor) > 1e-12 * thr) ok = false;
    for (std::size_t i = 0; i < r.rows.size(); ++i)
      worst_excess = std::max(worst_excess, r.rows[i].tilde_w2 - (thr + r.row_drift[i]));
    for (const auto& e : r.restart_events) restarted_events += e.restarted;
    Ns.push_back(r.rows.back().restart_count);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < Ns.size(); ++i) monotone = monotone && Ns[i] >= Ns[i - 1];
  const double slope = oracle::ls_slope(Ts, Ns);

  mfac::ExperimentConfig inf_cfg = cfg, off_cfg = cfg;
  inf_cfg.actor.t_end = off_cfg.actor.t_end = 10.0;
  inf_cfg.restart.threshold = std::numeric_limits<double>::infinity();
  off_cfg.restart.enabled = false;
  inf_cfg.track_w2 = off_cfg.track_w2 = true;
  const mfac::RunResult ri = mfac::run_two_timescale(inf_cfg);
  const mfac::RunResult ro = mfac::run_two_timescale(off_cfg);
  const bool identical = mfac::metrics_csv(ri) == mfac::metrics_csv(ro) &&
                         ri.final_ensemble->particles == ro.final_ensemble->particles &&
                         ri.final_policy.log_probs() == ro.final_policy.log_probs();

  ok = ok && worst_excess <= 0.0 && monotone && std::isfinite(slope) && identical;
  return {ok, "max (W~2 - threshold - drift) " + fmt("%.3f", worst_excess) + " (<=0), N(T=10,20,40) = " +
                  fmt("%.0f", Ns[0]) + "," + fmt("%.0f", Ns[1]) + "," + fmt("%.0f", Ns[2]) +
                  ", slope " + fmt("%.3f", slope) + ", restarts fired " +
                  std::to_string(restarted_events) + ", inf-threshold replay " +
                  (identical ? "bit-identical" : "DIFFERS")};
}

// 7. Representable MDP pipeline and the rho_pi construction.
Outcome representation_pipeline() {
  const mfac::GeneratedMdp gen = mfac::generate_representable_mdp(5, 3, 0.8, 77, 1.0);
  const TabularMdp& mdp = gen.mdp;
  const mfac::RepresentableSpec spec = mfac::fit_representation(mdp, 48, 11, mfac::kFitTolerance);
  Rng rng(5);
  const Policy pi = mfac::random_policy(mdp.n_states(), mdp.n_actions(), rng);
  const mfac::RhoPi rho = mfac::construct_rho_pi(spec, mdp, pi, 1.0);
  const mfac::RepresentationCheck chk =
      mfac::verify_representation(rho, spec, mdp, pi, 1000000, 99);

  const std::vector<double> q_pi = oracle::q_series(mdp, pi);
  double mc_err = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a)
      mc_err = std::max(mc_err, std::abs(chk.q_estimate(s, a) - q_pi[s * mdp.n_actions() + a]));
  const double res = spec.fit_residual();
  const double tol = std::max(chk.mc_radius, 5.0 * res / (1.0 - mdp.gamma()));

  // Quadrature value of the integral, independent of the Gauss-Hermite rule.
  const double gate = rho.b_beta * oracle::gauss_simpson([](double b) { return std::tanh(b); },
                                                         rho.p_mean, rho.p_stddev);
  double quad_err = 0.0;
  for (int p = 0; p < mdp.n_pairs(); ++p) {
    const Eigen::VectorXd x = mdp.features().row(p).transpose();
    double inner = 0.0;
    for (const auto& c : rho.nu_pi.components)
      inner += c.weight * oracle::gauss_simpson([](double z) { return std::tanh(z); },
                                                c.mean.dot(x), c.stddev * x.norm());
    quad_err = std::max(quad_err, std::abs(gate * inner - q_pi[p]));
  }

  mfac::Table q_table(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) q_table(s, a) = q_pi[s * mdp.n_actions() + a];
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd probes(32, mdp.input_dim() + 2);
  for (Eigen::Index i = 0; i < probes.size(); ++i) probes.data()[i] = normal(rng);
  const mfac::Table base = mfac::Table::Constant(mdp.n_states(), mdp.n_actions(),
                                                 1.0 / mdp.n_pairs());
  const double field = mfac::vector_field_at_rho_pi(rho, mdp, pi, q_table, probes, base);

  const bool ok = spec.conforming && res <= 1e-3 && mc_err <= tol &&
                  quad_err <= 1e-8 + 5.0 * res / (1.0 - mdp.gamma()) && field <= 1e-10;
  return {ok, "fit residual " + fmt("%.2e", res) + ", MC max error " + fmt("%.3e", mc_err) +
                  " (<= " + fmt("%.3e", tol) + "), quadrature error " + fmt("%.2e", quad_err) +
                  ", vector field " + fmt("%.2e", field) + " (<=1e-10)"};
}

// 8. W2 estimators.
Outcome w2_estimators() {
  Rng rng(88);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> nsize(1, 300);
  double sorted_err = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int n = nsize(rng);
    Eigen::MatrixXd a(n, 1), b(n, 1);
    std::vector<double> va(n), vb(n);
    for (int k = 0; k < n; ++k) {
      va[k] = a(k, 0) = normal(rng);
      vb[k] = b(k, 0) = 3.0 * normal(rng) + 0.5;
    }
    sorted_err = std::max(sorted_err, std::abs(mfac::w2_exact(a, b) - oracle::sorted_w2(va, vb)));
  }

  double sym = 0.0, ident = 0.0, tri = -1.0;
  bool nonneg = true;
  for (int i = 0; i < 100; ++i) {
    const int n = 5 + i % 36, d = 1 + i % 6;
    Eigen::MatrixXd a(n, d), b(n, d), c(n, d);
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      a.data()[k] = normal(rng);
      b.data()[k] = normal(rng) + 0.7;
      c.data()[k] = 2.0 * normal(rng);
    }
    const double ab = mfac::w2_exact(a, b), ba = mfac::w2_exact(b, a), bc = mfac::w2_exact(b, c),
                 ac = mfac::w2_exact(a, c);
    sym = std::max(sym, std::abs(ab - ba));
    ident = std::max(ident, mfac::w2_exact(a, a));
    tri = std::max(tri, ac - ab - bc);
    nonneg = nonneg && ab >= 0.0 && bc >= 0.0 && ac >= 0.0;
  }

  double sliced_rel = 0.0;
  for (int dim : {4, 10}) {
    const int n = 4096;
    Eigen::VectorXd m = Eigen::VectorXd::Constant(dim, 1.0);
    Eigen::MatrixXd a(n, dim), b(n, dim);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < dim; ++j) {
        a(k, j) = normal(rng);
        b(k, j) = normal(rng) + m(j);
      }
    // Isotropic mean shift: E_theta (theta . m)^2 = |m|^2 / D.
    const double expected = m.norm() / std::sqrt(static_cast<double>(dim));
    const double est = mfac::w2_sliced(a, b, 256, 2024);
    sliced_rel = std::max(sliced_rel, std::abs(est - expected) / expected);
  }
  const bool ok = sorted_err <= 1e-10 && sym <= 1e-12 && ident <= 1e-12 && tri <= 1e-10 &&
                  nonneg && sliced_rel <= 0.15;
  return {ok, "sorted coupling " + fmt("%.1e", sorted_err) + " (<=1e-10), symmetry " +
                  fmt("%.1e", sym) + ", identity " + fmt("%.1e", ident) + ", triangle excess " +
                  fmt("%.2e", tri) + " (<=1e-10), sliced relative error " +
                  fmt("%.3f", sliced_rel) + " (<=0.15)"};
}

// 9. Mean-field consistency in M and in eps.
Outcome mean_field_consistency() {
  const mfac::BenchmarkMdp bench = mfac::benchmark_mdp("bench5x3");
  const Eigen::MatrixXd& X = bench.mdp.features();
  const int W = static_cast<int>(X.cols());
  Rng rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd mw(W);
  for (int j = 0; j < W; ++j) mw(j) = 0.5 * normal(rng);
  constexpr double kBMean = 0.5;
  auto tanh_f = [](double z) { return std::tanh(z); };
  const double eb = oracle::gauss_simpson(tanh_f, kBMean, 1.0);
  std::vector<double> exact(X.rows());
  for (Eigen::Index p = 0; p < X.rows(); ++p)
    exact[p] = eb * oracle::gauss_simpson(tanh_f, mw.dot(X.row(p).transpose()), X.row(p).norm());

  std::vector<double> logm, logrms;
  for (int m : {64, 256, 1024}) {
    mfac::ParticleEnsemble ens;
    ens.alpha = 1.0;
    ens.b_beta = 1.0;
    ens.particles.resize(m, W + 1);
    double sq = 0.0;
    constexpr int kReps = 400;
    for (int r = 0; r < kReps; ++r) {
      for (int i = 0; i < m; ++i) {
        ens.particles(i, 0) = kBMean + normal(rng);
        for (int j = 0; j < W; ++j) ens.particles(i, j + 1) = mw(j) + normal(rng);
      }
      for (Eigen::Index p = 0; p < X.rows(); ++p) {
        const double e = mfac::q_forward(ens, X.row(p).transpose()) - exact[p];
        sq += e * e;
      }
    }
    logm.push_back(std::log(static_cast<double>(m)));
    logrms.push_back(0.5 * std::log(sq / (kReps * X.rows())));
  }
  const double slope = oracle::ls_slope(logm, logrms);

  // One-step remainder of DF-PPO against the replicator field under halving.
  double min_order = std::numeric_limits<double>::infinity(), rhs_err = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int S = 3 + i % 4, A = 2 + i % 3;
    const Policy pi = mfac::random_policy(S, A, rng);
    mfac::Table q(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) q(s, a) = 2.0 * normal(rng);
    mfac::Table rhs(S, A);
    for (int s = 0; s < S; ++s) {
      double mean = 0.0;
      for (int a = 0; a < A; ++a) mean += oracle::prob(pi, s, a) * q(s, a);
      for (int a = 0; a < A; ++a) rhs(s, a) = oracle::prob(pi, s, a) * (q(s, a) - mean);
    }
    rhs_err = std::max(rhs_err, (mfac::replicator_rhs(pi, q) - rhs).cwiseAbs().maxCoeff());
    auto remainder = [&](double eps) {
      return (mfac::df_ppo_step(pi, q, eps).probs() - pi.probs() - eps * rhs).cwiseAbs().maxCoeff();
    };
    const double r1 = remainder(0.1), r2 = remainder(0.05), r3 = remainder(0.025);
    min_order = std::min({min_order, std::log2(r1 / r2), std::log2(r2 / r3)});
  }
  const bool ok = slope >= -0.65 && slope <= -0.35 && min_order >= 1.0 && rhs_err <= 1e-12;
  return {ok, "RMS slope in M " + fmt("%.3f", slope) + " (-0.5 +/- 0.15), DF-PPO remainder order " +
                  fmt("%.3f", min_order) + " (>=1), replicator oracle " + fmt("%.1e", rhs_err)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "oracle exactness", oracle_exactness},
      {2, "gradient correctness", gradient_correctness},
      {3, "exact-Q PPO bound and T-doubling", theorem1_form},
      {4, "fixed-policy TD convergence", td_convergence},
      {5, "two-timescale ordering", two_timescale_ordering},
      {6, "restart mechanism", restart_mechanism},
      {7, "representable pipeline", representation_pipeline},
      {8, "W2 estimators", w2_estimators},
      {9, "mean-field consistency", mean_field_consistency},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s -- %s [%.1fs]\n", c.id, o.pass ? "PASS" : "FAIL", c.title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
