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

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace mfac {

/// Odd, bounded, smooth scalar nonlinearity with its derivatives.
struct Activation {
  std::string_view name;
  double (*value)(double);
  double (*derivative)(double);
  double (*second_derivative)(double);
};

const Activation& tanh_activation();
/// (2/pi) atan(x): another odd, bounded, invertible choice.
const Activation& arctan_activation();
/// Throws InputError for unknown names.
const Activation& activation_by_name(std::string_view name);

/// Finite-width critic Q(x) = (alpha / M) sum_i sigma(x; theta_i) with
/// sigma(x; b, w) = B_beta * beta(b) * sigma_tilde(w^T x).
///
/// Row i of `particles` is theta_i = (b, w) with w in R^{d+1}; D = d + 2.
/// One updater mutates an ensemble at a time.
struct ParticleEnsemble {
  Eigen::MatrixXd particles;
  double alpha = 1.0;
  double b_beta = 1.0;
  std::uint64_t seed = 0;
  const Activation* beta = &tanh_activation();
  const Activation* sigma_tilde = &tanh_activation();

  int m() const { return static_cast<int>(particles.rows()); }
  int param_dim() const { return static_cast<int>(particles.cols()); }
  int input_dim() const { return param_dim() - 2; }

  /// Throws InvariantViolation on non-finite entries or bad scalars.
  void validate() const;
};

enum class InitMode { kIid, kAntithetic };

/// Rows drawn i.i.d. from N(0, I_{d+2}). Antithetic mode (M even) stores
/// (b, w) and (-b, w) in adjacent rows so the critic starts at exactly 0.
ParticleEnsemble init_ensemble(int m, int d, std::uint64_t seed, double alpha,
                               double b_beta, InitMode mode = InitMode::kAntithetic);

/// Fills `particles` with a fresh draw from rho_0 using `rng`.
void resample_particles(ParticleEnsemble& ens, Rng& rng, InitMode mode);

double sigma_forward(const Eigen::Ref<const Eigen::VectorXd>& theta,
                     const Eigen::Ref<const Eigen::VectorXd>& x, double b_beta,
                     const Activation& beta = tanh_activation(),
                     const Activation& sigma_tilde = tanh_activation());

/// Analytic gradient of sigma_forward with respect to theta.
Eigen::VectorXd grad_sigma(const Eigen::Ref<const Eigen::VectorXd>& theta,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double b_beta,
                           const Activation& beta = tanh_activation(),
                           const Activation& sigma_tilde = tanh_activation());

double q_forward(const ParticleEnsemble& ens, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Per-pair activations of an ensemble over the finite grid.
struct ForwardCache {
  Eigen::MatrixXd pre;     ///< w_i^T x_p, pairs x particles
  Eigen::MatrixXd hidden;  ///< sigma_tilde(w_i^T x_p), pairs x particles
  Eigen::VectorXd gate;    ///< beta(b_i)
  Eigen::VectorXd q;       ///< critic value per pair
};

ForwardCache forward_pass(const ParticleEnsemble& ens, const Eigen::MatrixXd& features);

Table q_table_from_ensemble(const ParticleEnsemble& ens, const TabularMdp& mdp);

// Checkpoints: header line plus the row-major particle matrix in %.17g.
void save_ensemble(const ParticleEnsemble& ens, const std::string& path);
ParticleEnsemble load_ensemble(const std::string& path);
std::string ensemble_to_text(const ParticleEnsemble& ens);
ParticleEnsemble ensemble_from_text(const std::string& text);

}  // namespace mfac
