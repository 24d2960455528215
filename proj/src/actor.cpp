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

#include "mfac/actor.hpp"

#include "mfac/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mfac {

long ActorConfig::iterations() const {
  if (!(eps_actor > 0.0) || !std::isfinite(eps_actor))
    throw InputError("eps_actor must be positive");
  const long k = std::lround(t_end / eps_actor);
  if (k < 1) throw InputError("t_end / eps_actor must round to at least one iteration");
  return k;
}

Policy df_ppo_step(const Policy& policy, const Table& q, double eps) {
  if (q.rows() != policy.n_states() || q.cols() != policy.n_actions())
    throw InputError("q table shape does not match the policy");
  if (!q.allFinite()) throw InputError("q table has non-finite entries");
  if (eps == 0.0) return policy;
  Table logits = policy.log_probs() + eps * q;
  for (Eigen::Index s = 0; s < logits.rows(); ++s) {
    const double top = logits.row(s).maxCoeff();
    const double lse = top + std::log((logits.row(s).array() - top).exp().sum());
    logits.row(s).array() -= lse;
  }
  return Policy(std::move(logits));
}

Table replicator_rhs(const Policy& policy, const Table& q) {
  if (q.rows() != policy.n_states() || q.cols() != policy.n_actions())
    throw InputError("q table shape does not match the policy");
  const Table pi = policy.probs();
  const Eigen::VectorXd mean = (pi.array() * q.array()).rowwise().sum();
  return (pi.array() * (q.colwise() - mean).array()).matrix();
}

double kl_weighted(const Policy& policy_star, const Policy& policy,
                   const Eigen::VectorXd& state_weights) {
  if (policy_star.n_states() != policy.n_states() ||
      policy_star.n_actions() != policy.n_actions() ||
      state_weights.size() != policy.n_states())
    throw InputError("kl_weighted: shape mismatch");
  const Table ps = policy_star.probs();
  const Eigen::VectorXd per_state =
      (ps.array() * (policy_star.log_probs() - policy.log_probs()).array()).rowwise().sum();
  return state_weights.dot(per_state);
}

double concentrability(const VisitationMeasure& visitation_star, const Table& base) {
  const Table& v = visitation_star.weights;
  if (v.rows() != base.rows() || v.cols() != base.cols())
    throw InputError("concentrability: shape mismatch");
  double kappa = 0.0;
  for (Eigen::Index s = 0; s < v.rows(); ++s)
    for (Eigen::Index a = 0; a < v.cols(); ++a) {
      if (v(s, a) <= 0.0) continue;
      if (base(s, a) <= 0.0)
        throw DomainError("base distribution vanishes on the optimal visitation support");
      kappa = std::max(kappa, v(s, a) / base(s, a));
    }
  return kappa;
}

void save_policy(const Policy& policy, long iteration, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "mfac-policy 1\n"
      << "n_states " << policy.n_states() << " n_actions " << policy.n_actions()
      << " iteration " << iteration << '\n';
  char buf[64];
  for (int s = 0; s < policy.n_states(); ++s) {
    for (int a = 0; a < policy.n_actions(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", policy.log_probs()(s, a));
      out << (a ? " " : "") << buf;
    }
    out << '\n';
  }
}

Policy load_policy(const std::string& path, long* iteration) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string magic, k1, k2, k3;
  int version = 0, S = 0, A = 0;
  long it = 0;
  in >> magic >> version >> k1 >> S >> k2 >> A >> k3 >> it;
  if (!in || magic != "mfac-policy" || version != 1 || k1 != "n_states" ||
      k2 != "n_actions" || k3 != "iteration" || S < 1 || A < 1)
    throw InputError("malformed policy checkpoint " + path);
  Table logp(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      std::string tok;
      if (!(in >> tok)) throw InputError("policy checkpoint truncated");
      logp(s, a) = std::strtod(tok.c_str(), nullptr);
    }
  if (iteration) *iteration = it;
  return Policy(std::move(logp));
}

}  // namespace mfac
