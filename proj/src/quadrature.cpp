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

#include "mfac/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace mfac {
namespace {

// Orthonormal Hermite polynomials p_0..p_n at x; returns p_n and p_{n-1}.
void orthonormal_hermite(std::size_t n, double x, double& pn, double& pn1,
                         double* sum_sq_below_n) {
  double p_prev = 0.0;
  double p = std::pow(std::numbers::pi, -0.25);
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum_sq += p * p;
    const double kk = static_cast<double>(k);
    const double next = x * std::sqrt(2.0 / (kk + 1.0)) * p -
                        std::sqrt(kk / (kk + 1.0)) * p_prev;
    p_prev = p;
    p = next;
  }
  pn = p;
  pn1 = p_prev;
  if (sum_sq_below_n) *sum_sq_below_n = sum_sq;
}

}  // namespace

GaussHermiteRule::GaussHermiteRule(std::size_t n_nodes) {
  const auto n = static_cast<Eigen::Index>(n_nodes);
  // Golub–Welsch seed, then Newton polish on the orthonormal recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k) / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes_.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + n);
  weights_.resize(n_nodes);

  const double dn = static_cast<double>(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    double x = nodes_[i];
    for (int it = 0; it < 6; ++it) {
      double pn, pn1;
      orthonormal_hermite(n_nodes, x, pn, pn1, nullptr);
      const double dx = pn / (std::sqrt(2.0 * dn) * pn1);
      x -= dx;
      if (std::abs(dx) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    double pn, pn1, sum_sq;
    orthonormal_hermite(n_nodes, x, pn, pn1, &sum_sq);
    nodes_[i] = x;
    weights_[i] = 1.0 / sum_sq;
  }
  // Symmetrize to make odd integrands cancel exactly.
  for (std::size_t i = 0; i < n_nodes / 2; ++i) {
    const std::size_t j = n_nodes - 1 - i;
    const double x = 0.5 * (nodes_[j] - nodes_[i]);
    const double w = 0.5 * (weights_[i] + weights_[j]);
    nodes_[i] = -x;
    nodes_[j] = x;
    weights_[i] = weights_[j] = w;
  }
  if (n_nodes % 2 == 1) nodes_[n_nodes / 2] = 0.0;
}

const GaussHermiteRule& gauss_hermite_64() {
  static const GaussHermiteRule rule(64);
  return rule;
}

}  // namespace mfac
