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

#include "mfac/wasserstein.hpp"

#include "mfac/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mfac {
namespace {

void check_samples(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw InputError("W2 needs equal sample counts");
  if (a.cols() != b.cols()) throw InputError("W2 samples live in different dimensions");
  if (a.rows() < 1) throw InputError("W2 needs at least one sample");
  if (!a.allFinite() || !b.allFinite()) throw InputError("W2 samples must be finite");
}

// Min-cost perfect matching by shortest augmenting paths with potentials
// (Kuhn–Munkres, O(n^3)). Returns the optimal total cost.
double min_cost_matching(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
  return total;
}

double sorted_w2_sq(std::vector<double>& x, std::vector<double>& y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return acc / static_cast<double>(x.size());
}

}  // namespace

double w2_exact(const Eigen::MatrixXd& sample_a, const Eigen::MatrixXd& sample_b) {
  check_samples(sample_a, sample_b);
  const Eigen::Index n = sample_a.rows();
  if (n > kMaxExactSamples)
    throw InputError("exact W2 is limited to " + std::to_string(kMaxExactSamples) +
                     " samples; use the sliced estimator");
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cost(i, j) = (sample_a.row(i) - sample_b.row(j)).squaredNorm();
  const double total = std::max(0.0, min_cost_matching(cost));
  return std::sqrt(total / static_cast<double>(n));
}

double w2_sliced(const Eigen::MatrixXd& sample_a, const Eigen::MatrixXd& sample_b,
                 int n_proj, std::uint64_t seed) {
  check_samples(sample_a, sample_b);
  if (n_proj < 1) throw InputError("sliced W2 needs at least one projection");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index dim = sample_a.cols();
  Eigen::VectorXd dir(dim);
  std::vector<double> pa(sample_a.rows()), pb(sample_b.rows());
  double acc = 0.0;
  for (int k = 0; k < n_proj; ++k) {
    do {
      for (Eigen::Index c = 0; c < dim; ++c) dir(c) = normal(rng);
    } while (dir.norm() == 0.0);
    dir.normalize();
    Eigen::Map<Eigen::VectorXd>(pa.data(), sample_a.rows()) = sample_a * dir;
    Eigen::Map<Eigen::VectorXd>(pb.data(), sample_b.rows()) = sample_b * dir;
    acc += sorted_w2_sq(pa, pb);
  }
  return std::sqrt(acc / n_proj);
}

double w2(const Eigen::MatrixXd& sample_a, const Eigen::MatrixXd& sample_b,
          W2Estimator estimator, std::uint64_t seed) {
  return estimator == W2Estimator::kExact
             ? w2_exact(sample_a, sample_b)
             : w2_sliced(sample_a, sample_b, kDefaultProjections, seed);
}

double tilde_w2(const ParticleEnsemble& ens, const Eigen::MatrixXd& ref_sample,
                W2Estimator estimator, std::uint64_t seed) {
  return ens.alpha * w2(ens.particles, ref_sample, estimator, seed);
}

double measure_noise_floor(int n, int dim, std::uint64_t seed, W2Estimator estimator,
                           InitMode mode) {
  ParticleEnsemble a, b;
  a.particles.resize(n, dim);
  b.particles.resize(n, dim);
  Rng rng(seed);
  resample_particles(a, rng, mode);
  resample_particles(b, rng, mode);
  return w2(a.particles, b.particles, estimator, seed);
}

// ---------------------------------------------------------------------------

void RestartPolicy::validate() const {
  if (!(threshold > 0.0)) throw InputError("restart threshold must be positive");
  if (check_every < 1) throw InputError("restart check cadence must be >= 1");
  if (ref_sample.rows() < 1) throw InputError("restart policy needs a reference sample");
}

RestartMonitor::RestartMonitor(RestartPolicy policy) : policy_(std::move(policy)) {
  policy_.validate();
}

void RestartMonitor::record_step(double alpha, double max_displacement) {
  drift_since_check_ += alpha * max_displacement;
}

bool RestartMonitor::is_check_point(long step_index) const {
  return step_index > 0 && step_index % policy_.check_every == 0;
}

RestartDecision RestartMonitor::check(ParticleEnsemble& ens, long step_index, double t) {
  if (!is_check_point(step_index)) return RestartDecision::kContinue;
  if (ens.particles.rows() != policy_.ref_sample.rows() ||
      ens.particles.cols() != policy_.ref_sample.cols())
    throw InputError("reference sample shape does not match the ensemble");
  RestartEvent ev;
  ev.step = step_index;
  ev.t = t;
  ev.threshold = policy_.threshold;
  ev.drift_bound = drift_since_check_;
  // An infinite threshold never fires, so skip the distance computation.
  ev.tilde_w2 = std::isinf(policy_.threshold)
                    ? 0.0
                    : tilde_w2(ens, policy_.ref_sample, policy_.estimator, policy_.seed);
  drift_since_check_ = 0.0;
  last_tilde_w2_ = ev.tilde_w2;
  if (ev.tilde_w2 >= policy_.threshold) {
    ++restarts_;
    std::seed_seq seq{policy_.seed, static_cast<std::uint64_t>(restarts_)};
    Rng rng(seq);
    resample_particles(ens, rng, policy_.init_mode);
    ev.restarted = true;
    ev.post_restart_w2 = tilde_w2(ens, policy_.ref_sample, policy_.estimator, policy_.seed);
    last_tilde_w2_ = ev.post_restart_w2;
  }
  ev.restart_index = restarts_;
  events_.push_back(ev);
  return ev.restarted ? RestartDecision::kRestart : RestartDecision::kContinue;
}

}  // namespace mfac
