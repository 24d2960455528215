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

#include "mfac/critic.hpp"

#include "mfac/error.hpp"

#include <cmath>
#include <sstream>

namespace mfac {
namespace {

constexpr double kMaxAbsGate = 50.0;

// Moves every particle by -(eps'/alpha) sum_p c_p grad sigma(x_p; theta_i).
TdStepStats apply_weighted_residual(ParticleEnsemble& ens, const Eigen::MatrixXd& features,
                                    const ForwardCache& cache, const Eigen::VectorXd& c,
                                    double eps_prime) {
  const int M = ens.m();
  const int W = ens.param_dim() - 1;
  const Eigen::MatrixXd slope = cache.pre.unaryExpr(ens.sigma_tilde->derivative);
  const Eigen::MatrixXd weighted = slope.array().colwise() * c.array();
  const Eigen::MatrixXd w_grad = weighted.transpose() * features;  // M x W
  const Eigen::VectorXd b_grad = cache.hidden.transpose() * c;     // M

  const double step = -eps_prime / ens.alpha * ens.b_beta;
  Eigen::MatrixXd delta(M, W + 1);
  for (int i = 0; i < M; ++i) {
    const double b = ens.particles(i, 0);
    delta(i, 0) = step * ens.beta->derivative(b) * b_grad(i);
    delta.row(i).tail(W) = (step * ens.beta->value(b)) * w_grad.row(i);
  }
  if (!delta.allFinite()) {
    std::ostringstream os;
    os << "non-finite TD displacement (eps'=" << eps_prime << ", alpha=" << ens.alpha
       << ", max |residual weight|=" << c.cwiseAbs().maxCoeff() << ")";
    throw NumericalError(os.str());
  }
  const Eigen::VectorXd gates = ens.particles.col(0) + delta.col(0);
  Eigen::Index worst = 0;
  const double max_gate = gates.cwiseAbs().maxCoeff(&worst);
  if (max_gate > kMaxAbsGate) {
    std::ostringstream os;
    os << "TD update saturated particle " << worst << ": |b| = " << max_gate << " > "
       << kMaxAbsGate << " (eps'=" << eps_prime << ")";
    throw NumericalError(os.str());
  }
  ens.particles += delta;
  return {delta.rowwise().norm().maxCoeff()};
}

}  // namespace

Weighting weighting_distribution(const TabularMdp& mdp, const Policy& policy,
                                 const Table& base) {
  if (base.rows() != mdp.n_states() || base.cols() != mdp.n_actions())
    throw InputError("base distribution shape does not match the mdp");
  if ((base.array() < 0.0).any() || std::abs(base.sum() - 1.0) > 1e-10)
    throw InputError("base distribution is not normalized");
  const Eigen::VectorXd phi0 = base.rowwise().sum();
  Table eval = 0.5 * base + 0.5 * product_with_policy(phi0, policy);
  VisitationMeasure sampling = visitation(mdp, policy, eval);
  return {VisitationMeasure{std::move(eval)}, std::move(sampling)};
}

TdTarget make_td_target(const TabularMdp& mdp, const Policy& policy,
                        const VisitationMeasure& sampling) {
  return {mdp.reward_vector(), pair_transition(mdp, policy), flatten(sampling.weights),
          mdp.gamma()};
}

Eigen::VectorXd td_vector_field(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const Table& q, double alpha, double b_beta,
                                const TabularMdp& mdp, const Policy& policy,
                                const VisitationMeasure& weighting,
                                const Activation& beta, const Activation& sigma_tilde) {
  if (theta.size() != mdp.input_dim() + 2)
    throw InputError("theta dimension does not match the mdp embedding");
  const Eigen::VectorXd qv = flatten(q);
  const Eigen::VectorXd residual =
      qv - mdp.reward_vector() - mdp.gamma() * (pair_transition(mdp, policy) * qv);
  const Eigen::VectorXd w = flatten(weighting.weights);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
  for (int p = 0; p < mdp.n_pairs(); ++p) {
    if (w(p) == 0.0) continue;
    g -= (w(p) * residual(p) / alpha) *
         grad_sigma(theta, mdp.features().row(p).transpose(), b_beta, beta, sigma_tilde);
  }
  return g;
}

Eigen::VectorXd td_vector_field(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const ParticleEnsemble& ens, const TabularMdp& mdp,
                                const Policy& policy, const VisitationMeasure& weighting) {
  return td_vector_field(theta, q_table_from_ensemble(ens, mdp), ens.alpha, ens.b_beta, mdp,
                         policy, weighting, *ens.beta, *ens.sigma_tilde);
}

TdStepStats expected_td_step(ParticleEnsemble& ens, const TabularMdp& mdp,
                             const TdTarget& target, double eps_prime) {
  if (eps_prime == 0.0) return {};
  const ForwardCache cache = forward_pass(ens, mdp.features());
  const Eigen::VectorXd residual =
      cache.q - target.reward - target.gamma * (target.p_tilde * cache.q);
  const Eigen::VectorXd c = target.weights.cwiseProduct(residual);
  return apply_weighted_residual(ens, mdp.features(), cache, c, eps_prime);
}

TdStepStats td_step_from_transitions(ParticleEnsemble& ens, const TabularMdp& mdp,
                                     const TdTarget& target,
                                     const std::vector<Transition>& batch,
                                     double eps_prime) {
  if (eps_prime == 0.0) return {};
  const ForwardCache cache = forward_pass(ens, mdp.features());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(mdp.n_pairs());
  for (const Transition& tr : batch)
    c(tr.pair) += tr.weight * (cache.q(tr.pair) - target.reward(tr.pair) -
                               target.gamma * cache.q(tr.next_pair));
  return apply_weighted_residual(ens, mdp.features(), cache, c, eps_prime);
}

TransitionSampler::TransitionSampler(const TabularMdp& mdp, const Policy& policy,
                                     const VisitationMeasure& sampling)
    : n_actions_(mdp.n_actions()) {
  const Eigen::VectorXd w = flatten(sampling.weights);
  pair_dist_ = std::discrete_distribution<int>(w.data(), w.data() + w.size());
  for (int p = 0; p < mdp.n_pairs(); ++p) {
    const Eigen::VectorXd row = mdp.transition().row(p).transpose();
    next_state_.emplace_back(row.data(), row.data() + row.size());
  }
  const Table pi = policy.probs();
  for (int s = 0; s < mdp.n_states(); ++s) {
    const Eigen::VectorXd row = pi.row(s).transpose();
    action_.emplace_back(row.data(), row.data() + row.size());
  }
}

Transition TransitionSampler::draw(Rng& rng) const {
  const int p = pair_dist_(rng);
  const int s2 = next_state_[p](rng);
  const int a2 = action_[s2](rng);
  return {p, s2 * n_actions_ + a2, 1.0};
}

std::vector<Transition> TransitionSampler::draw_batch(int n, Rng& rng) const {
  std::vector<Transition> batch;
  batch.reserve(n);
  for (int k = 0; k < n; ++k) {
    Transition tr = draw(rng);
    tr.weight = 1.0 / n;
    batch.push_back(tr);
  }
  return batch;
}

TdStepStats stochastic_td_step(ParticleEnsemble& ens, const TabularMdp& mdp,
                               const TdTarget& target, const TransitionSampler& sampler,
                               const TdConfig& cfg, Rng& rng) {
  if (cfg.batch < 1) throw InputError("stochastic TD needs batch >= 1");
  const auto batch = sampler.draw_batch(cfg.batch, rng);
  return td_step_from_transitions(ens, mdp, target, batch, cfg.eps_prime);
}

double policy_eval_error(const Table& q, const Table& q_exact, const Table& eval_dist) {
  if (q.rows() != q_exact.rows() || q.cols() != q_exact.cols() ||
      eval_dist.rows() != q.rows() || eval_dist.cols() != q.cols())
    throw InputError("policy_eval_error: shape mismatch");
  return std::sqrt((eval_dist.array() * (q - q_exact).array().square()).sum());
}

double policy_eval_error(const ParticleEnsemble& ens, const TabularMdp& mdp,
                         const Policy& policy, const Table& eval_dist) {
  return policy_eval_error(q_table_from_ensemble(ens, mdp), exact_q(mdp, policy), eval_dist);
}

}  // namespace mfac
