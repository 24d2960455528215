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

#include "mfac/mdp.hpp"

#include "mfac/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfac {
namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kPolicyNormTol = 1e-10;

std::string dims(int s, int a) {
  std::ostringstream os;
  os << s << "x" << a;
  return os.str();
}

void check_dims(const TabularMdp& mdp, const Policy& policy) {
  if (mdp.n_states() != policy.n_states() || mdp.n_actions() != policy.n_actions())
    throw InputError("policy is " + dims(policy.n_states(), policy.n_actions()) +
                     " but mdp is " + dims(mdp.n_states(), mdp.n_actions()));
}

void check_table(const TabularMdp& mdp, const Table& t, const char* what) {
  if (t.rows() != mdp.n_states() || t.cols() != mdp.n_actions())
    throw InputError(std::string(what) + " has shape " +
                     dims(static_cast<int>(t.rows()), static_cast<int>(t.cols())) +
                     ", expected " + dims(mdp.n_states(), mdp.n_actions()));
}

void check_probability_table(const Table& t, const char* what) {
  if ((t.array() < 0.0).any() || !t.allFinite())
    throw InputError(std::string(what) + " has negative or non-finite entries");
  if (std::abs(t.sum() - 1.0) > 1e-10)
    throw InputError(std::string(what) + " is not normalized (mass " +
                     std::to_string(t.sum()) + ")");
}

// Dense LU solve of (I - gamma P~) x = rhs (or its transpose).
Eigen::VectorXd resolvent_solve(const TabularMdp& mdp, const Policy& policy,
                                const Eigen::VectorXd& rhs, bool transpose) {
  const Eigen::MatrixXd p_tilde = pair_transition(mdp, policy);
  Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(mdp.n_pairs(), mdp.n_pairs()) - mdp.gamma() * p_tilde;
  if (transpose) system.transposeInPlace();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite() || !std::isfinite(lu.determinant()) || lu.determinant() == 0.0)
    throw NumericalError("singular Bellman system (corrupted mdp or policy)");
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularMdp

TabularMdp::TabularMdp(Eigen::MatrixXd transition, Table reward, double gamma,
                       Eigen::VectorXd initial_dist, Eigen::MatrixXd embedding)
    : transition_(std::move(transition)),
      reward_(std::move(reward)),
      gamma_(gamma),
      initial_dist_(std::move(initial_dist)),
      embedding_(std::move(embedding)) {
  const int S = n_states();
  const int A = n_actions();
  if (S < 1 || A < 1) throw InputError("mdp needs at least one state and one action");
  if (transition_.rows() != S * A || transition_.cols() != S)
    throw InputError("transition must have n_states*n_actions rows and n_states columns");
  if (initial_dist_.size() != S) throw InputError("initial_dist must have n_states entries");
  if (embedding_.rows() != S * A) throw InputError("embedding must have one row per pair");
  if (!(gamma_ > 0.0 && gamma_ < 1.0))
    throw InputError("gamma must lie strictly inside (0, 1)");
  if (!transition_.allFinite() || (transition_.array() < 0.0).any())
    throw InputError("transition has negative or non-finite entries");
  for (int p = 0; p < S * A; ++p) {
    const double row = transition_.row(p).sum();
    if (std::abs(row - 1.0) > kRowSumTol)
      throw InputError("transition row " + std::to_string(p) + " sums to " +
                       std::to_string(row));
  }
  if (!reward_.allFinite() || (reward_.array() < 0.0).any())
    throw InputError("rewards must be finite and nonnegative");
  if ((initial_dist_.array() < 0.0).any() || std::abs(initial_dist_.sum() - 1.0) > 1e-12)
    throw InputError("initial_dist is not a probability vector");
  if (!embedding_.allFinite()) throw InputError("embedding has non-finite entries");
  const double max_norm = embedding_.rowwise().norm().maxCoeff();
  if (max_norm > 1.0 + 1e-12)
    throw InputError("embedding leaves the unit ball (max norm " +
                     std::to_string(max_norm) + ")");
  features_.resize(S * A, embedding_.cols() + 1);
  features_.leftCols(embedding_.cols()) = embedding_;
  features_.col(embedding_.cols()).setOnes();
}

Eigen::VectorXd TabularMdp::reward_vector() const { return flatten(reward_); }

TabularMdp TabularMdp::with_gamma(double gamma) const {
  return TabularMdp(transition_, reward_, gamma, initial_dist_, embedding_);
}

TabularMdp TabularMdp::with_reward(Table reward) const {
  return TabularMdp(transition_, std::move(reward), gamma_, initial_dist_, embedding_);
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(Table log_probs) : log_probs_(std::move(log_probs)) {
  if (log_probs_.rows() < 1 || log_probs_.cols() < 1) throw InputError("empty policy");
  if (!log_probs_.allFinite()) throw InputError("policy log-probabilities must be finite");
  for (Eigen::Index s = 0; s < log_probs_.rows(); ++s) {
    const double mass = log_probs_.row(s).array().exp().sum();
    if (std::abs(mass - 1.0) > kPolicyNormTol)
      throw InputError("policy row " + std::to_string(s) + " has mass " +
                       std::to_string(mass));
  }
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy(Table::Constant(n_states, n_actions, -std::log(double(n_actions))));
}

Policy Policy::from_probs(const Table& probs) {
  if (!probs.allFinite() || (probs.array() < 0.0).any())
    throw InputError("probabilities must be finite and nonnegative");
  Table clamped = probs.cwiseMax(kProbabilityFloor);
  Table logp(probs.rows(), probs.cols());
  for (Eigen::Index s = 0; s < probs.rows(); ++s) {
    const double z = clamped.row(s).sum();
    logp.row(s) = (clamped.row(s).array() / z).log();
  }
  return Policy(std::move(logp));
}

Policy Policy::deterministic(const std::vector<int>& actions, int n_actions) {
  Table probs = Table::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) throw InputError("action out of range");
    probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return from_probs(probs);
}

Policy random_policy(int n_states, int n_actions, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Table probs(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) probs(s, a) = expo(rng);
  for (int s = 0; s < n_states; ++s) probs.row(s) /= probs.row(s).sum();
  return Policy::from_probs(probs);
}

// ---------------------------------------------------------------------------
// Construction helpers

Eigen::MatrixXd default_embedding(int n_states, int n_actions) {
  const double c = 0.9 / std::sqrt(2.0);
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(n_states * n_actions, n_states + n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      emb(s * n_actions + a, s) = c;
      emb(s * n_actions + a, n_states + a) = c;
    }
  return emb;
}

TabularMdp random_mdp(int n_states, int n_actions, double gamma, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int SA = n_states * n_actions;
  Eigen::MatrixXd trans(SA, n_states);
  for (int p = 0; p < SA; ++p) {
    for (int s2 = 0; s2 < n_states; ++s2) trans(p, s2) = expo(rng);
    trans.row(p) /= trans.row(p).sum();
  }
  Table reward(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) reward(s, a) = unif(rng);
  Eigen::VectorXd d0 = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
  return TabularMdp(std::move(trans), std::move(reward), gamma, std::move(d0),
                    default_embedding(n_states, n_actions));
}

Eigen::VectorXd flatten(const Table& table) {
  Eigen::VectorXd v(table.size());
  const auto A = table.cols();
  for (Eigen::Index s = 0; s < table.rows(); ++s)
    for (Eigen::Index a = 0; a < A; ++a) v(s * A + a) = table(s, a);
  return v;
}

Table unflatten(const Eigen::VectorXd& v, int n_states, int n_actions) {
  Table t(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) t(s, a) = v(s * n_actions + a);
  return t;
}

// ---------------------------------------------------------------------------
// Exact oracles

Eigen::MatrixXd pair_transition(const TabularMdp& mdp, const Policy& policy) {
  check_dims(mdp, policy);
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const Table pi = policy.probs();
  Eigen::MatrixXd pt(S * A, S * A);
  for (int p = 0; p < S * A; ++p)
    for (int s2 = 0; s2 < S; ++s2) {
      const double ps = mdp.transition()(p, s2);
      for (int a2 = 0; a2 < A; ++a2) pt(p, s2 * A + a2) = ps * pi(s2, a2);
    }
  return pt;
}

Table product_with_policy(const Eigen::VectorXd& state_dist, const Policy& policy) {
  if (state_dist.size() != policy.n_states())
    throw InputError("state distribution size does not match the policy");
  return state_dist.asDiagonal() * policy.probs();
}

Table exact_q(const TabularMdp& mdp, const Policy& policy) {
  const Eigen::VectorXd q = resolvent_solve(mdp, policy, mdp.reward_vector(), false);
  return unflatten(q, mdp.n_states(), mdp.n_actions());
}

Eigen::VectorXd exact_v(const TabularMdp& mdp, const Policy& policy) {
  const Table q = exact_q(mdp, policy);
  return (q.array() * policy.probs().array()).rowwise().sum();
}

Table advantage(const TabularMdp& mdp, const Policy& policy) {
  const Table q = exact_q(mdp, policy);
  const Eigen::VectorXd v = (q.array() * policy.probs().array()).rowwise().sum();
  return q.colwise() - v;
}

double expected_return(const TabularMdp& mdp, const Policy& policy) {
  return mdp.initial_dist().dot(exact_v(mdp, policy));
}

VisitationMeasure visitation(const TabularMdp& mdp, const Policy& policy,
                             const Table& start) {
  check_dims(mdp, policy);
  check_table(mdp, start, "start distribution");
  check_probability_table(start, "start distribution");
  const Eigen::VectorXd rhs = (1.0 - mdp.gamma()) * flatten(start);
  Eigen::VectorXd occ = resolvent_solve(mdp, policy, rhs, true);
  // Round-off can leave -1e-17 on unreachable pairs.
  occ = occ.cwiseMax(0.0);
  occ /= occ.sum();
  return {unflatten(occ, mdp.n_states(), mdp.n_actions())};
}

double msbe(const TabularMdp& mdp, const Policy& policy, const Table& q,
            const VisitationMeasure& weighting) {
  check_table(mdp, q, "q table");
  check_table(mdp, weighting.weights, "weighting");
  const Eigen::VectorXd qv = flatten(q);
  const Eigen::VectorXd residual =
      qv - mdp.reward_vector() - mdp.gamma() * (pair_transition(mdp, policy) * qv);
  return 0.5 * flatten(weighting.weights).dot(residual.cwiseAbs2());
}

double perf_diff(const TabularMdp& mdp, const Policy& policy_a,
                 const Policy& policy_b) {
  const VisitationMeasure occ_a =
      visitation(mdp, policy_a, product_with_policy(mdp.initial_dist(), policy_a));
  const Eigen::VectorXd state_occ = occ_a.state_marginal();
  const Table adv_b = advantage(mdp, policy_b);
  const Table diff = policy_a.probs() - policy_b.probs();
  const Eigen::VectorXd inner = (adv_b.array() * diff.array()).rowwise().sum();
  return state_occ.dot(inner) / (1.0 - mdp.gamma());
}

Policy optimal_policy(const TabularMdp& mdp) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const double g = mdp.gamma();
  auto backup = [&](const Eigen::VectorXd& v) {
    Table q(S, A);
    const Eigen::VectorXd pv = mdp.transition() * v;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) q(s, a) = mdp.reward()(s, a) + g * pv(s * A + a);
    return q;
  };
  auto greedy = [&](const Table& q) {
    std::vector<int> act(S);
    for (int s = 0; s < S; ++s) {
      const double best = q.row(s).maxCoeff();
      int a = 0;
      while (q(s, a) < best - 1e-12 * std::max(1.0, std::abs(best))) ++a;
      act[s] = a;
    }
    return act;
  };

  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  for (int it = 0; it < 1000000; ++it) {
    const Eigen::VectorXd next = backup(v).rowwise().maxCoeff();
    const double residual = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (residual <= 1e-12) break;
  }
  // Policy-iteration polish: greedy actions are stable under exact evaluation.
  std::vector<int> act = greedy(backup(v));
  for (int it = 0; it < 100; ++it) {
    const Table q_det = exact_q(mdp, Policy::deterministic(act, A));
    const std::vector<int> next = greedy(q_det);
    bool improved = false;
    for (int s = 0; s < S; ++s)
      if (next[s] != act[s] && q_det(s, next[s]) > q_det(s, act[s]) + 1e-12) improved = true;
    if (!improved) break;
    act = next;
  }
  return Policy::deterministic(act, A);
}

}  // namespace mfac
