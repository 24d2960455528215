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

#include <string>

namespace mfac {

struct ActorConfig {
  double eps_actor = 1e-2;  ///< PPO stepsize
  double t_end = 1.0;       ///< continuous-time horizon, t = k * eps_actor

  /// K = round(t_end / eps_actor); throws InputError unless K >= 1.
  long iterations() const;
};

/// Closed-form KL-regularized update:
/// log pi'(a|s) = log pi(a|s) + eps Q(s,a) - log sum_a' pi(a'|s) exp(eps Q(s,a')).
/// eps == 0 returns the policy unchanged.
Policy df_ppo_step(const Policy& policy, const Table& q, double eps);

/// Replicator field pi(a|s) (Q(s,a) - <Q(s,.), pi(.|s)>).
Table replicator_rhs(const Policy& policy, const Table& q);

/// sum_s w(s) KL(pi*(.|s) || pi(.|s)).
double kl_weighted(const Policy& policy_star, const Policy& policy,
                   const Eigen::VectorXd& state_weights);

/// max over pairs of visitation_star / base. Throws DomainError when base
/// vanishes where visitation_star has mass.
double concentrability(const VisitationMeasure& visitation_star, const Table& base);

// Policy checkpoints: "mfac-policy 1", dims and iteration, then log-probs.
void save_policy(const Policy& policy, long iteration, const std::string& path);
Policy load_policy(const std::string& path, long* iteration = nullptr);

}  // namespace mfac
