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

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace mfac {

/// Gauss–Hermite rule for the weight exp(-x^2) on the real line.
class GaussHermiteRule {
 public:
  explicit GaussHermiteRule(std::size_t n_nodes);

  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  /// E[f(X)] for X ~ N(mean, stddev^2).
  template <class F>
  double gaussian_expectation(F&& f, double mean, double stddev) const {
    const double scale = std::numbers::sqrt2 * stddev;
    const std::size_t n = nodes_.size();
    double acc = 0.0;
    // Nodes are symmetric; pairing them keeps odd integrands exactly zero.
    for (std::size_t i = 0; i < n / 2; ++i) {
      const double dx = scale * nodes_[n - 1 - i];
      acc += weights_[i] * (f(mean + dx) + f(mean - dx));
    }
    if (n % 2 == 1) acc += weights_[n / 2] * f(mean);
    return acc * (1.0 / std::sqrt(std::numbers::pi));
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// The shared 64-node rule used for every Gaussian-vs-activation integral.
const GaussHermiteRule& gauss_hermite_64();

}  // namespace mfac
