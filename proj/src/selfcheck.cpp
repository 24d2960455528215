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

#include "mfac/selfcheck.hpp"

#include "mfac/actor.hpp"
#include "mfac/critic.hpp"
#include "mfac/harness.hpp"
#include "mfac/mdp.hpp"
#include "mfac/network.hpp"
#include "mfac/representable.hpp"
#include "mfac/wasserstein.hpp"

#include <cmath>
#include <cstdio>
#include <exception>

namespace mfac {
namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

CheckResult bound_check(const std::string& name, double measured, double limit) {
  return {name, measured <= limit, "max " + sci(measured) + " (limit " + sci(limit) + ")"};
}

CheckResult check_bellman(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const TabularMdp mdp = random_mdp(2 + i % 9, 1 + i % 4, 0.5 + 0.02 * i, rng);
    const Policy pi = random_policy(mdp.n_states(), mdp.n_actions(), rng);
    const Eigen::VectorXd q = flatten(exact_q(mdp, pi));
    const Eigen::VectorXd res = q - mdp.reward_vector() - mdp.gamma() * pair_transition(mdp, pi) * q;
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return bound_check("bellman residual of exact_q", worst, 1e-10);
}

CheckResult check_visitation(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const TabularMdp mdp = random_mdp(3 + i % 7, 2 + i % 3, 0.9, rng);
    const Policy pi = random_policy(mdp.n_states(), mdp.n_actions(), rng);
    const Table start = product_with_policy(mdp.initial_dist(), pi);
    const VisitationMeasure v = visitation(mdp, pi, start);
    const Eigen::RowVectorXd e = flatten(v.weights).transpose();
    const Eigen::RowVectorXd fixed =
        (1.0 - mdp.gamma()) * flatten(start).transpose() + mdp.gamma() * e * pair_transition(mdp, pi);
    worst = std::max({worst, (e - fixed).cwiseAbs().maxCoeff(), std::abs(e.sum() - 1.0)});
  }
  return bound_check("visitation stationarity and mass", worst, 1e-10);
}

CheckResult check_perf_diff(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const TabularMdp mdp = random_mdp(4 + i % 5, 2 + i % 3, 0.85, rng);
    const Policy a = random_policy(mdp.n_states(), mdp.n_actions(), rng);
    const Policy b = random_policy(mdp.n_states(), mdp.n_actions(), rng);
    worst = std::max(worst, std::abs(expected_return(mdp, a) - expected_return(mdp, b) -
                                     perf_diff(mdp, a, b)));
  }
  return bound_check("performance difference identity", worst, 1e-8);
}

CheckResult check_gradient(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int d = 2 + i % 6;
    Eigen::VectorXd theta(d + 2), x(d + 1);
    for (int k = 0; k < d + 2; ++k) theta(k) = normal(rng);
    for (int k = 0; k < d; ++k) x(k) = normal(rng);
    x.head(d) /= std::max(1.0, x.head(d).norm());
    x(d) = 1.0;
    const Eigen::VectorXd g = grad_sigma(theta, x, 2.0);
    for (int k = 0; k < d + 2; ++k) {
      const double h = 1e-5;
      Eigen::VectorXd tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      const double fd = (sigma_forward(tp, x, 2.0) - sigma_forward(tm, x, 2.0)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g(k)) / std::max(1.0, std::abs(g(k))));
    }
  }
  return bound_check("grad_sigma against central differences", worst, 1e-6);
}

CheckResult check_replicator(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_ratio = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Policy pi = random_policy(4, 3, rng);
    Table q(4, 3);
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 3; ++a) q(s, a) = normal(rng);
    const Table rhs = replicator_rhs(pi, q);
    auto remainder = [&](double eps) {
      return (df_ppo_step(pi, q, eps).probs() - pi.probs() - eps * rhs).cwiseAbs().maxCoeff();
    };
    const double r1 = remainder(1e-2), r2 = remainder(5e-3);
    worst_ratio = std::max(worst_ratio, r2 / r1);
  }
  // Second-order remainder shrinks by ~4 when the step halves.
  return bound_check("DF-PPO step against the replicator field (remainder ratio)", worst_ratio,
                     0.3);
}

CheckResult check_w2(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = 8 + i;
    Eigen::MatrixXd a(n, 1), b(n, 1), c(n, 1);
    for (int k = 0; k < n; ++k) {
      a(k, 0) = normal(rng);
      b(k, 0) = normal(rng) + 1.0;
      c(k, 0) = 2.0 * normal(rng);
    }
    const double ab = w2_exact(a, b), ba = w2_exact(b, a), ac = w2_exact(a, c),
                 cb = w2_exact(c, b);
    // In one dimension every projection is +/- identity, so sliced equals exact.
    worst = std::max({worst, std::abs(ab - ba), std::abs(ab - w2_sliced(a, b, 4, i)),
                      std::max(0.0, ab - ac - cb), w2_exact(a, a)});
  }
  return bound_check("W2 symmetry, triangle inequality, 1-D sliced agreement", worst, 1e-10);
}

CheckResult check_representable() {
  const BenchmarkMdp bench = benchmark_mdp("bench5x3");
  const RepresentableSpec fitted = fit_representation(bench.mdp, 48, 11, kFitTolerance);
  const Policy pi = Policy::uniform(bench.mdp.n_states(), bench.mdp.n_actions());
  const RhoPi rho = construct_rho_pi(*bench.spec, bench.mdp, pi, 1.0);
  const double roundtrip =
      std::abs(mollified_beta(rho.p_mean, rho.p_stddev, tanh_activation()) * rho.b_beta - rho.z_pi);
  const bool ok = fitted.conforming && roundtrip <= 1e-8;
  return {"representable fit and rho_pi normalization", ok,
          "fit residual " + sci(fitted.fit_residual()) + ", Z_pi roundtrip " + sci(roundtrip)};
}

CheckResult check_runs() {
  ExperimentConfig cfg;
  cfg.benchmark = "bench5x3";
  cfg.ensemble.m = 16;
  cfg.actor.eps_actor = 0.01;
  cfg.actor.t_end = 0.5;
  cfg.td.eta = 2.0;
  const std::string a = metrics_csv(run_two_timescale(cfg));
  const std::string b = metrics_csv(run_two_timescale(cfg));
  ExperimentConfig frozen = cfg;
  frozen.actor.eps_actor = 0.0;
  frozen.eps_prime = 0.02;
  frozen.iterations = 50;
  const std::string c = metrics_csv(run_two_timescale(frozen));
  const std::string d = metrics_csv(run_td_fixed_policy(frozen));
  const bool ok = a == b && c == d;
  return {"run determinism and frozen-actor mode equivalence", ok,
          std::string(a == b ? "deterministic" : "outputs differ between identical runs") +
              (c == d ? ", modes agree" : ", modes disagree")};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed,
                                       const std::function<void(const CheckResult&)>& on_result) {
  Rng rng(seed);
  std::vector<std::function<CheckResult()>> checks = {
      [&] { return check_bellman(rng); },    [&] { return check_visitation(rng); },
      [&] { return check_perf_diff(rng); },  [&] { return check_gradient(rng); },
      [&] { return check_replicator(rng); }, [&] { return check_w2(rng); },
      [] { return check_representable(); }, [] { return check_runs(); },
  };
  std::vector<CheckResult> results;
  for (auto& check : checks) {
    CheckResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {"(check raised)", false, e.what()};
    }
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace mfac
