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

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mfac {

/// Per-(state, action) real table, rows indexed by state.
using Table = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Finite MDP whose state-action pairs are embedded in the unit ball.
///
/// Pairs are flattened as p = s * n_actions + a. The transition matrix has
/// one row per pair and one column per next state. Features append the
/// constant coordinate, so row p of features() is (s, a, 1).
class TabularMdp {
 public:
  TabularMdp(Eigen::MatrixXd transition, Table reward, double gamma,
             Eigen::VectorXd initial_dist, Eigen::MatrixXd embedding);

  int n_states() const { return static_cast<int>(reward_.rows()); }
  int n_actions() const { return static_cast<int>(reward_.cols()); }
  int n_pairs() const { return n_states() * n_actions(); }
  /// Embedding dimension d (features have d + 1 columns).
  int input_dim() const { return static_cast<int>(embedding_.cols()); }
  int pair(int s, int a) const { return s * n_actions() + a; }

  double gamma() const { return gamma_; }
  const Table& reward() const { return reward_; }
  const Eigen::MatrixXd& transition() const { return transition_; }
  const Eigen::VectorXd& initial_dist() const { return initial_dist_; }
  const Eigen::MatrixXd& embedding() const { return embedding_; }
  const Eigen::MatrixXd& features() const { return features_; }

  /// Reward flattened in pair order.
  Eigen::VectorXd reward_vector() const;

  TabularMdp with_gamma(double gamma) const;
  TabularMdp with_reward(Table reward) const;

 private:
  Eigen::MatrixXd transition_;
  Table reward_;
  double gamma_;
  Eigen::VectorXd initial_dist_;
  Eigen::MatrixXd embedding_;
  Eigen::MatrixXd features_;
};

/// Stochastic policy stored as log-probabilities.
class Policy {
 public:
  static constexpr double kProbabilityFloor = 1e-12;

  /// Accepts log-probabilities whose rows exponentiate to 1 within 1e-10.
  explicit Policy(Table log_probs);

  static Policy uniform(int n_states, int n_actions);
  /// Clamps probabilities at kProbabilityFloor and renormalizes each row.
  static Policy from_probs(const Table& probs);
  static Policy deterministic(const std::vector<int>& actions, int n_actions);

  int n_states() const { return static_cast<int>(log_probs_.rows()); }
  int n_actions() const { return static_cast<int>(log_probs_.cols()); }
  const Table& log_probs() const { return log_probs_; }
  Table probs() const { return log_probs_.array().exp().matrix(); }

 private:
  Table log_probs_;
};

/// Discounted occupancy over state-action pairs.
struct VisitationMeasure {
  Table weights;

  Eigen::VectorXd state_marginal() const { return weights.rowwise().sum(); }
};

/// Dirichlet(1) rows.
Policy random_policy(int n_states, int n_actions, Rng& rng);

/// Simplex-vertex embedding (c e_s, c e_a) with c chosen so every pair has
/// norm 0.9.
Eigen::MatrixXd default_embedding(int n_states, int n_actions);

/// Dense random MDP: Dirichlet(1) transition rows, uniform [0, 1) rewards,
/// uniform initial distribution and the default embedding.
TabularMdp random_mdp(int n_states, int n_actions, double gamma, Rng& rng);

/// Pair-to-pair kernel P~(s', a' | s, a) = pi(a' | s') P(s' | s, a).
Eigen::MatrixXd pair_transition(const TabularMdp& mdp, const Policy& policy);

/// Start distribution D (x) pi over pairs.
Table product_with_policy(const Eigen::VectorXd& state_dist, const Policy& policy);

Table exact_q(const TabularMdp& mdp, const Policy& policy);
Eigen::VectorXd exact_v(const TabularMdp& mdp, const Policy& policy);
Table advantage(const TabularMdp& mdp, const Policy& policy);
double expected_return(const TabularMdp& mdp, const Policy& policy);

VisitationMeasure visitation(const TabularMdp& mdp, const Policy& policy,
                             const Table& start);

/// Half the weighted squared Bellman residual of q under policy.
double msbe(const TabularMdp& mdp, const Policy& policy, const Table& q,
            const VisitationMeasure& weighting);

/// J(a) - J(b) through the performance-difference identity.
double perf_diff(const TabularMdp& mdp, const Policy& policy_a,
                 const Policy& policy_b);

/// Greedy optimal policy with probabilities floored at 1e-12.
Policy optimal_policy(const TabularMdp& mdp);

/// Row-major pair vector <-> S x A table.
Eigen::VectorXd flatten(const Table& table);
Table unflatten(const Eigen::VectorXd& v, int n_states, int n_actions);

// File format (JSON); see docs/formats.md.
TabularMdp load_mdp(const std::string& path);
void save_mdp(const TabularMdp& mdp, const std::string& path);
std::string mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const std::string& text);

}  // namespace mfac
