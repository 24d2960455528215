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
#include <limits>
#include <vector>

namespace mfac {

enum class W2Estimator { kExact, kSliced };

/// Largest sample count accepted by the exact matcher.
inline constexpr int kMaxExactSamples = 1024;
inline constexpr int kDefaultProjections = 256;

/// Empirical W2 between equal-size samples (rows) via an exact min-cost
/// perfect matching on squared Euclidean costs.
double w2_exact(const Eigen::MatrixXd& sample_a, const Eigen::MatrixXd& sample_b);

/// RMS over random unit directions of the 1-D W2 between projected samples.
double w2_sliced(const Eigen::MatrixXd& sample_a, const Eigen::MatrixXd& sample_b,
                 int n_proj, std::uint64_t seed);

double w2(const Eigen::MatrixXd& sample_a, const Eigen::MatrixXd& sample_b,
          W2Estimator estimator, std::uint64_t seed = 0);

/// alpha * W2(particles, reference).
double tilde_w2(const ParticleEnsemble& ens, const Eigen::MatrixXd& ref_sample,
                W2Estimator estimator, std::uint64_t seed = 0);

/// Unscaled W2 between two independent draws of n points from rho_0.
double measure_noise_floor(int n, int dim, std::uint64_t seed, W2Estimator estimator,
                           InitMode mode = InitMode::kAntithetic);

struct RestartPolicy {
  double threshold = std::numeric_limits<double>::infinity();  ///< on tilde W2
  int check_every = 1;       ///< TD steps between checks
  double lambda_scale = 3.0; ///< metadata
  Eigen::MatrixXd ref_sample;
  W2Estimator estimator = W2Estimator::kExact;
  InitMode init_mode = InitMode::kAntithetic;
  std::uint64_t seed = 0;    ///< root of the resampling stream

  void validate() const;
};

struct RestartEvent {
  long step = 0;
  double t = 0.0;
  double tilde_w2 = 0.0;
  double threshold = 0.0;
  int restart_index = 0;     ///< restarts so far, including this one
  double drift_bound = 0.0;  ///< alpha * sum of max displacements since the last check
  bool restarted = false;
  double post_restart_w2 = 0.0;  ///< tilde W2 of the redrawn ensemble
};

enum class RestartDecision { kContinue, kRestart };

/// Tracks drift between checks and redraws the ensemble from rho_0 when the
/// scaled distance to the reference reaches the threshold. The actor is
/// never touched.
class RestartMonitor {
 public:
  explicit RestartMonitor(RestartPolicy policy);

  /// Accumulates alpha * max displacement of one TD step.
  void record_step(double alpha, double max_displacement);

  bool is_check_point(long step_index) const;

  /// At check points, measures tilde W2 and restarts when it is >= the
  /// threshold. Off check points always continues.
  RestartDecision check(ParticleEnsemble& ens, long step_index, double t);

  int restarts() const { return restarts_; }
  const std::vector<RestartEvent>& events() const { return events_; }
  const RestartPolicy& policy() const { return policy_; }
  double last_tilde_w2() const { return last_tilde_w2_; }
  double drift_since_check() const { return drift_since_check_; }

 private:
  RestartPolicy policy_;
  int restarts_ = 0;
  double drift_since_check_ = 0.0;
  double last_tilde_w2_ = 0.0;
  std::vector<RestartEvent> events_;
};

}  // namespace mfac
