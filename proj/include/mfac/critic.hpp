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

#include "mfac/mdp.hpp"
#include "mfac/network.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mfac {

enum class TdMode { kExpected, kStochastic };

struct TdConfig {
  double eps_prime = 1e-3;  ///< TD stepsize
  double eta = 1.0;         ///< eps_prime / eps_actor when driven by the harness
  TdMode mode = TdMode::kExpected;
  int batch = 1;            ///< samples per stochastic step
};

/// Evaluation distribution phi~^pi = (phi~_0 + phi_0 (x) pi) / 2 and the TD
/// sampling distribution Phi~^pi, its visitation measure.
struct Weighting {
  VisitationMeasure eval;
  VisitationMeasure sampling;
};

Weighting weighting_distribution(const TabularMdp& mdp, const Policy& policy,
                                 const Table& base);

/// Everything a TD update needs about (mdp, policy), flattened in pair order.
struct TdTarget {
  Eigen::VectorXd reward;
  Eigen::MatrixXd p_tilde;
  Eigen::VectorXd weights;  ///< sampling distribution over pairs
  double gamma = 0.0;
};

TdTarget make_td_target(const TabularMdp& mdp, const Policy& policy,
                        const VisitationMeasure& sampling);

/// g(theta) = -E[(Q(x) - r(x) - gamma Q(x')) alpha^{-1} grad sigma(x; theta)]
/// for an arbitrary critic table, summed exactly over the grid.
Eigen::VectorXd td_vector_field(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const Table& q, double alpha, double b_beta,
                                const TabularMdp& mdp, const Policy& policy,
                                const VisitationMeasure& weighting,
                                const Activation& beta = tanh_activation(),
                                const Activation& sigma_tilde = tanh_activation());

/// Same field with Q taken from the ensemble.
Eigen::VectorXd td_vector_field(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const ParticleEnsemble& ens, const TabularMdp& mdp,
                                const Policy& policy, const VisitationMeasure& weighting);

struct TdStepStats {
  double max_displacement = 0.0;  ///< max_i |theta_i' - theta_i|
};

/// One Euler step of the mean-field TD flow: every particle moves by
/// eps_prime * g(theta_i). Throws NumericalError on non-finite motion or
/// when some |b| exceeds 50.
TdStepStats expected_td_step(ParticleEnsemble& ens, const TabularMdp& mdp,
                             const TdTarget& target, double eps_prime);

/// A sampled transition (x, x') with its averaging weight.
struct Transition {
  int pair;
  int next_pair;
  double weight;
};

/// DF-TD update averaged over explicit transitions.
TdStepStats td_step_from_transitions(ParticleEnsemble& ens, const TabularMdp& mdp,
                                     const TdTarget& target,
                                     const std::vector<Transition>& batch,
                                     double eps_prime);

/// Draws x ~ sampling, s' ~ P(.|x), a' ~ pi(.|s').
class TransitionSampler {
 public:
  TransitionSampler(const TabularMdp& mdp, const Policy& policy,
                    const VisitationMeasure& sampling);
  Transition draw(Rng& rng) const;
  std::vector<Transition> draw_batch(int n, Rng& rng) const;

 private:
  int n_actions_;
  mutable std::discrete_distribution<int> pair_dist_;
  mutable std::vector<std::discrete_distribution<int>> next_state_;
  mutable std::vector<std::discrete_distribution<int>> action_;
};

TdStepStats stochastic_td_step(ParticleEnsemble& ens, const TabularMdp& mdp,
                               const TdTarget& target, const TransitionSampler& sampler,
                               const TdConfig& cfg, Rng& rng);

/// sqrt(sum_x eval(x) (Q(x) - Q^pi(x))^2).
double policy_eval_error(const Table& q, const Table& q_exact, const Table& eval_dist);
double policy_eval_error(const ParticleEnsemble& ens, const TabularMdp& mdp,
                         const Policy& policy, const Table& eval_dist);

}  // namespace mfac
