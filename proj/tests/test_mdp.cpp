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

#include "mfac/error.hpp"
#include "mfac/mdp.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace mfac;

namespace {

TabularMdp one_state(double r, double gamma) {
  Eigen::MatrixXd p(1, 1);
  p << 1.0;
  Table rew(1, 1);
  rew << r;
  Eigen::VectorXd d0(1);
  d0 << 1.0;
  return TabularMdp(p, rew, gamma, d0, default_embedding(1, 1));
}

TabularMdp random5x3(std::uint64_t seed) {
  Rng rng(seed);
  return random_mdp(5, 3, 0.9, rng);
}

}  // namespace

TEST_CASE("exact_q on small closed forms") {
  CHECK(exact_q(one_state(1.0, 0.5), Policy::uniform(1, 1))(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  TabularMdp m = random5x3(1);
  TabularMdp zero = m.with_reward(Table::Zero(5, 3));
  Rng rng(2);
  const Policy pi = random_policy(5, 3, rng);
  CHECK(exact_q(zero, pi).cwiseAbs().maxCoeff() == 0.0);
  CHECK(exact_v(zero, pi).cwiseAbs().maxCoeff() == 0.0);
  CHECK(advantage(zero, pi).cwiseAbs().maxCoeff() == 0.0);
  CHECK(expected_return(zero, pi) == 0.0);
}

TEST_CASE("exact_q matches the truncated series and is a Bellman fixed point") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TabularMdp m = random5x3(seed);
    Rng rng(seed + 100);
    const Policy pi = random_policy(5, 3, rng);
    const Table q = exact_q(m, pi);
    const std::vector<double> qs = oracle::q_series(m, pi);
    for (int p = 0; p < m.n_pairs(); ++p) CHECK(std::abs(flatten(q)(p) - qs[p]) <= 1e-8);
    const Eigen::VectorXd qv = flatten(q);
    const Eigen::VectorXd res = qv - m.reward_vector() - m.gamma() * pair_transition(m, pi) * qv;
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("exact_v, advantage and J agree with their definitions") {
  TabularMdp m = random5x3(3);
  Rng rng(7);
  const Policy pi = random_policy(5, 3, rng);
  const Table q = exact_q(m, pi);
  const Eigen::VectorXd v = exact_v(m, pi);
  const Table a = advantage(m, pi);
  const Table probs = pi.probs();
  for (int s = 0; s < 5; ++s) {
    CHECK(v(s) == doctest::Approx(q.row(s).dot(probs.row(s))).epsilon(1e-13));
    CHECK(std::abs(a.row(s).dot(probs.row(s))) <= 1e-10);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(a(s, k) - (q(s, k) - v(s))) <= 1e-12);
  }
  const double j = expected_return(m, pi);
  CHECK(std::abs(j - oracle::j_series(m, pi)) <= 1e-8);

  // J = (1-gamma)^{-1} E_visitation[r] from D0 (x) pi.
  const VisitationMeasure vis = visitation(m, pi, product_with_policy(m.initial_dist(), pi));
  const double via = (vis.weights.array() * m.reward().array()).sum() / (1.0 - m.gamma());
  CHECK(std::abs(j - via) <= 1e-10);

  // Deterministic policy picks out one Q entry per state.
  const Policy det = Policy::deterministic({0, 2, 1, 1, 0}, 3);
  const Table qd = exact_q(m, det);
  const Eigen::VectorXd vd = exact_v(m, det);
  const int acts[] = {0, 2, 1, 1, 0};
  for (int s = 0; s < 5; ++s) CHECK(vd(s) == doctest::Approx(qd(s, acts[s])).epsilon(1e-10));

  // single action per state: no advantage
  Rng r2(9);
  TabularMdp single = random_mdp(4, 1, 0.8, r2);
  CHECK(advantage(single, Policy::uniform(4, 1)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("visitation matches the series and the product identity") {
  TabularMdp m = random5x3(4);
  Rng rng(11);
  const Policy pi = random_policy(5, 3, rng);
  Table start = Table::Constant(5, 3, 1.0 / 15.0);
  const VisitationMeasure vis = visitation(m, pi, start);
  const std::vector<double> ser = oracle::visitation_series(m, pi, std::vector<double>(15, 1.0 / 15.0));
  for (int p = 0; p < 15; ++p) CHECK(std::abs(flatten(vis.weights)(p) - ser[p]) <= 1e-8);
  CHECK(vis.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(vis.weights.minCoeff() >= 0.0);

  // From D (x) pi, the joint factorizes as (state marginal) (x) pi.
  const VisitationMeasure prod = visitation(m, pi, product_with_policy(m.initial_dist(), pi));
  const Table refactored = product_with_policy(prod.state_marginal(), pi);
  CHECK((refactored - prod.weights).cwiseAbs().maxCoeff() <= 1e-10);

  // Tiny discount: only the start survives.
  const VisitationMeasure tiny = visitation(m.with_gamma(1e-12), pi, start);
  CHECK((tiny.weights - start).cwiseAbs().maxCoeff() <= 1e-10);

  // Absorbing single pair.
  const VisitationMeasure one = visitation(one_state(1.0, 0.9), Policy::uniform(1, 1), Table::Ones(1, 1));
  CHECK(one.weights(0, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(visitation(m, pi, Table::Constant(5, 3, 0.1)), InputError);
}

TEST_CASE("msbe") {
  TabularMdp m = random5x3(5);
  Rng rng(13);
  const Policy pi = random_policy(5, 3, rng);
  const VisitationMeasure w = visitation(m, pi, Table::Constant(5, 3, 1.0 / 15.0));
  CHECK(msbe(m, pi, exact_q(m, pi), w) <= 1e-12);

  TabularMdp ones = m.with_reward(Table::Ones(5, 3));
  CHECK(msbe(ones, pi, Table::Zero(5, 3), w) == doctest::Approx(0.5).epsilon(1e-14));

  // Double loop reference for a random table.
  Table q = Table::Random(5, 3);
  const oracle::Mat k = oracle::pair_kernel(m, pi);
  double ref = 0.0;
  for (int p = 0; p < 15; ++p) {
    double nxt = 0.0;
    for (int p2 = 0; p2 < 15; ++p2) nxt += k[p][p2] * q(p2 / 3, p2 % 3);
    const double res = q(p / 3, p % 3) - m.reward()(p / 3, p % 3) - m.gamma() * nxt;
    ref += 0.5 * w.weights(p / 3, p % 3) * res * res;
  }
  CHECK(std::abs(msbe(m, pi, q, w) - ref) <= 1e-12);
}

TEST_CASE("performance difference identity on 100 random triples") {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(1000 + i);
    TabularMdp m = random_mdp(4, 3, 0.85, rng);
    const Policy a = random_policy(4, 3, rng);
    const Policy b = random_policy(4, 3, rng);
    const double direct = oracle::j_series(m, a) - oracle::j_series(m, b);
    worst = std::max(worst, std::abs(perf_diff(m, a, b) - direct));
    worst = std::max(worst, std::abs(perf_diff(m, b, a) + direct));
    CHECK(std::abs(perf_diff(m, a, a)) <= 1e-12);
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("optimal policy dominates random policies") {
  TabularMdp m = random5x3(6);
  const Policy star = optimal_policy(m);
  const double js = expected_return(m, star);
  Rng rng(17);
  for (int i = 0; i < 100; ++i) CHECK(js >= expected_return(m, random_policy(5, 3, rng)) - 1e-10);
  CHECK(star.log_probs().allFinite());

  // Two states, action 1 pays, identical dynamics.
  Eigen::MatrixXd p(4, 2);
  p << 0.5, 0.5, 0.5, 0.5, 0.3, 0.7, 0.3, 0.7;
  Table r(2, 2);
  r << 0.0, 1.0, 0.0, 1.0;
  p.row(1) = p.row(0);
  p.row(3) = p.row(2);
  TabularMdp chain(p, r, 0.9, Eigen::VectorXd::Constant(2, 0.5), default_embedding(2, 2));
  const Table probs = optimal_policy(chain).probs();
  CHECK(probs(0, 1) > 1.0 - 1e-9);
  CHECK(probs(1, 1) > 1.0 - 1e-9);
}

TEST_CASE("J is invariant under consistent action relabeling") {
  TabularMdp m = random5x3(8);
  Rng rng(19);
  const Policy pi = random_policy(5, 3, rng);
  const int perm[] = {2, 0, 1};
  Eigen::MatrixXd p2(15, 5);
  Table r2(5, 3), lp2(5, 3);
  Eigen::MatrixXd e2(15, m.input_dim());
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 3; ++a) {
      p2.row(s * 3 + perm[a]) = m.transition().row(s * 3 + a);
      r2(s, perm[a]) = m.reward()(s, a);
      lp2(s, perm[a]) = pi.log_probs()(s, a);
      e2.row(s * 3 + perm[a]) = m.embedding().row(s * 3 + a);
    }
  TabularMdp m2(p2, r2, m.gamma(), m.initial_dist(), e2);
  CHECK(expected_return(m2, Policy(lp2)) == doctest::Approx(expected_return(m, pi)).epsilon(1e-12));
}

TEST_CASE("construction rejects invalid inputs") {
  Eigen::MatrixXd p(1, 1);
  p << 0.9;
  Table r = Table::Ones(1, 1);
  Eigen::VectorXd d0 = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(TabularMdp(p, r, 0.5, d0, default_embedding(1, 1)), InputError);
  p << 1.0;
  CHECK_THROWS_AS(TabularMdp(p, -r, 0.5, d0, default_embedding(1, 1)), InputError);
  CHECK_THROWS_AS(TabularMdp(p, r, 1.0, d0, default_embedding(1, 1)), InputError);
  CHECK_THROWS_AS(TabularMdp(p, r, 0.5, d0, Eigen::MatrixXd::Constant(1, 2, 1.0)), InputError);
  Table bad(1, 2);
  bad << std::log(0.5), std::log(0.6);
  CHECK_THROWS_AS(Policy{bad}, InputError);
  Table probs(1, 2);
  probs << 1.0, 0.0;
  CHECK(Policy::from_probs(probs).log_probs().allFinite());
}

TEST_CASE("default embedding stays inside the unit ball") {
  const Eigen::MatrixXd e = default_embedding(7, 4);
  CHECK(e.rowwise().norm().maxCoeff() == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("mdp JSON round trip is exact") {
  TabularMdp m = random5x3(9);
  const auto path = std::filesystem::temp_directory_path() / "mfac_test_mdp.json";
  save_mdp(m, path.string());
  TabularMdp back = load_mdp(path.string());
  std::filesystem::remove(path);
  CHECK((back.transition() - m.transition()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.reward() - m.reward()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.embedding() - m.embedding()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.gamma() == m.gamma());
  CHECK_THROWS_AS(mdp_from_json("{\"format\": \"nope\"}"), InputError);
  CHECK_THROWS_AS(load_mdp("/nonexistent/mfac.json"), InputError);
}
