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

#include <cstdint>
#include <string>
#include <vector>

namespace mfac {

/// Isotropic Gaussian N(mean, stddev^2 I) with a nonnegative weight.
struct MixtureComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  double stddev = 1.0;
};

/// Finite isotropic Gaussian mixture over first-layer weights w.
struct MeasureMixture {
  std::vector<MixtureComponent> components;

  double total_weight() const;
  int dim() const;
  /// Throws InvariantViolation on negative weights, bad stddevs, mixed
  /// dimensions or (when `probability`) mass away from 1 by more than 1e-12.
  void validate(bool probability) const;

  /// sum_k weight_k E_{w ~ N(m_k, s_k^2 I)}[act(w^T x)] by 64-node
  /// Gauss–Hermite along x.
  double expect_activation(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Activation& act = tanh_activation()) const;

  /// Draw from the normalized mixture.
  Eigen::VectorXd sample(Rng& rng) const;
  double density(const Eigen::Ref<const Eigen::VectorXd>& w) const;

  /// Symmetric pair (1/2) N(m, s^2) + (1/2) N(-m, s^2); integrates any odd
  /// activation to zero.
  static MeasureMixture symmetric_pair(const Eigen::VectorXd& mean, double stddev);
};

/// Reward/kernel representation through the activation:
///   r(x)      ~ b_r * E_mu[sigma(w^T x)]
///   P(s' | x) ~ phi(s') * E_psi(s')[sigma(w^T x)]
struct RepresentableSpec {
  MeasureMixture mu;
  std::vector<MeasureMixture> psi;  ///< one per next state
  Eigen::VectorXd phi;
  double b_r = 1.0;
  double b_beta = 1.0;
  const Activation* activation = &tanh_activation();
  double reward_residual = 0.0;
  double kernel_residual = 0.0;
  bool conforming = true;

  double fit_residual() const { return std::max(reward_residual, kernel_residual); }
  /// 2 (B_r + gamma / (1 - gamma) B_r sum(phi)).
  double min_b_beta(double gamma) const;
};

/// Default acceptance tolerance on the fit residual.
inline constexpr double kFitTolerance = 1e-3;

Table represented_reward(const RepresentableSpec& spec, const TabularMdp& mdp);
/// Pairs x next states.
Eigen::MatrixXd represented_kernel(const RepresentableSpec& spec, const TabularMdp& mdp);

/// Fits mixtures to a tabular MDP: nonnegative least squares over a random
/// dictionary of Gaussian atoms (with their reflections), followed by
/// Gauss–Newton refinement of active atom means. Sets `conforming` false when
/// the residual exceeds `tolerance`.
RepresentableSpec fit_representation(const TabularMdp& mdp, int n_atoms, std::uint64_t seed,
                                     double tolerance = kFitTolerance);

struct GeneratedMdp {
  TabularMdp mdp;
  RepresentableSpec spec;
};

/// Builds an MDP directly from mixtures (default embedding, so every pair
/// has the same norm), which makes it representable by construction.
GeneratedMdp generate_representable_mdp(int n_states, int n_actions, double gamma,
                                        std::uint64_t seed, double b_r = 1.0);

/// beta_eps(z) = E_{b ~ N(z, eps^2)}[beta(b)].
double mollified_beta(double z, double eps, const Activation& beta = tanh_activation());

/// Inverse of mollified_beta by bisection to 1e-12. Throws DomainError when
/// y is outside beta_eps([-kInverseBracket, kInverseBracket]).
double mollified_beta_inverse(double y, double eps,
                              const Activation& beta = tanh_activation());
inline constexpr double kInverseBracket = 8.0;

/// Mollifier width from the Lipschitz/smoothness constants of tanh:
/// min(1, sqrt(pi/2) / (6 L0), sqrt(pi/2) / (2 l L1)).
double default_mollifier_width();

/// rho_pi = alpha^{-1} (nu_pi x p_pi) + (1 - alpha^{-1}) rho_0.
struct RhoPi {
  MeasureMixture nu_pi;
  double p_mean = 0.0;
  double p_stddev = 1.0;
  double z_pi = 0.0;
  double alpha = 1.0;
  double b_beta = 1.0;
  double mixing() const { return 1.0 / alpha; }
};

RhoPi construct_rho_pi(const RepresentableSpec& spec, const TabularMdp& mdp,
                       const Policy& policy, double alpha);

struct RepresentationCheck {
  Table q_estimate;
  Table q_exact;
  Table sigma_mc;         ///< per-pair standard error
  double max_error = 0.0;
  double mc_radius = 0.0;  ///< 3 * max standard error
};

/// Monte Carlo Q(x; rho_pi) on the grid against exact_q. The rho_0 part
/// integrates to zero and is skipped.
RepresentationCheck verify_representation(const RhoPi& rho, const RepresentableSpec& spec,
                                          const TabularMdp& mdp, const Policy& policy,
                                          long n_samples, std::uint64_t seed);

/// max_k |g(theta_k; rho_pi, pi)| using `q_table` as Q(.; rho_pi).
double vector_field_at_rho_pi(const RhoPi& rho, const TabularMdp& mdp, const Policy& policy,
                              const Table& q_table, const Eigen::MatrixXd& probe_points,
                              const Table& base);

/// chi^2(mixture || N(0, I)) by Monte Carlo.
double chi_squared_vs_standard(const MeasureMixture& mix, long n_samples, std::uint64_t seed);

std::string spec_to_json(const RepresentableSpec& spec);
RepresentableSpec spec_from_json(const std::string& text);

}  // namespace mfac
