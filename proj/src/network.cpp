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

#include "mfac/network.hpp"

#include "mfac/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mfac {
namespace {

double tanh_value(double x) { return std::tanh(x); }
double tanh_deriv(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
double tanh_second(double x) {
  const double t = std::tanh(x);
  return -2.0 * t * (1.0 - t * t);
}

double arctan_value(double x) { return 2.0 / std::numbers::pi * std::atan(x); }
double arctan_deriv(double x) { return 2.0 / std::numbers::pi / (1.0 + x * x); }
double arctan_second(double x) {
  const double q = 1.0 + x * x;
  return -4.0 / std::numbers::pi * x / (q * q);
}

}  // namespace

const Activation& tanh_activation() {
  static const Activation act{"tanh", &tanh_value, &tanh_deriv, &tanh_second};
  return act;
}

const Activation& arctan_activation() {
  static const Activation act{"arctan", &arctan_value, &arctan_deriv, &arctan_second};
  return act;
}

const Activation& activation_by_name(std::string_view name) {
  if (name == "tanh") return tanh_activation();
  if (name == "arctan") return arctan_activation();
  throw InputError("unknown activation '" + std::string(name) + "'");
}

void ParticleEnsemble::validate() const {
  if (particles.rows() < 1 || particles.cols() < 3)
    throw InvariantViolation("ensemble needs M >= 1 and D >= 3");
  if (!particles.allFinite()) throw InvariantViolation("ensemble has non-finite parameters");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InvariantViolation("alpha must be >= 1");
  if (!(b_beta > 0.0) || !std::isfinite(b_beta)) throw InvariantViolation("B_beta must be > 0");
}

void resample_particles(ParticleEnsemble& ens, Rng& rng, InitMode mode) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int M = ens.m();
  const int D = ens.param_dim();
  if (mode == InitMode::kAntithetic) {
    if (M % 2 != 0) throw InputError("antithetic initialization needs an even M");
    for (int i = 0; i < M; i += 2) {
      for (int k = 0; k < D; ++k) ens.particles(i, k) = normal(rng);
      ens.particles.row(i + 1) = ens.particles.row(i);
      ens.particles(i + 1, 0) = -ens.particles(i, 0);
    }
  } else {
    for (int i = 0; i < M; ++i)
      for (int k = 0; k < D; ++k) ens.particles(i, k) = normal(rng);
  }
}

ParticleEnsemble init_ensemble(int m, int d, std::uint64_t seed, double alpha,
                               double b_beta, InitMode mode) {
  if (m < 1 || d < 1) throw InputError("ensemble needs m >= 1 and d >= 1");
  ParticleEnsemble ens;
  ens.particles.resize(m, d + 2);
  ens.alpha = alpha;
  ens.b_beta = b_beta;
  ens.seed = seed;
  Rng rng(seed);
  resample_particles(ens, rng, mode);
  ens.validate();
  return ens;
}

double sigma_forward(const Eigen::Ref<const Eigen::VectorXd>& theta,
                     const Eigen::Ref<const Eigen::VectorXd>& x, double b_beta,
                     const Activation& beta, const Activation& sigma_tilde) {
  const double pre = theta.tail(theta.size() - 1).dot(x);
  return b_beta * beta.value(theta(0)) * sigma_tilde.value(pre);
}

Eigen::VectorXd grad_sigma(const Eigen::Ref<const Eigen::VectorXd>& theta,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double b_beta,
                           const Activation& beta, const Activation& sigma_tilde) {
  const double pre = theta.tail(theta.size() - 1).dot(x);
  Eigen::VectorXd g(theta.size());
  g(0) = b_beta * beta.derivative(theta(0)) * sigma_tilde.value(pre);
  g.tail(theta.size() - 1) = (b_beta * beta.value(theta(0)) * sigma_tilde.derivative(pre)) * x;
  return g;
}

double q_forward(const ParticleEnsemble& ens, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != ens.param_dim() - 1)
    throw InputError("input has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(ens.param_dim() - 1));
  double acc = 0.0;
  for (int i = 0; i < ens.m(); ++i)
    acc += sigma_forward(ens.particles.row(i).transpose(), x, ens.b_beta, *ens.beta,
                         *ens.sigma_tilde);
  return ens.alpha / ens.m() * acc;
}

ForwardCache forward_pass(const ParticleEnsemble& ens, const Eigen::MatrixXd& features) {
  if (features.cols() != ens.param_dim() - 1)
    throw InputError("feature dimension does not match the ensemble");
  const int M = ens.m();
  ForwardCache c;
  c.pre.noalias() = features * ens.particles.rightCols(ens.param_dim() - 1).transpose();
  c.hidden = c.pre.unaryExpr(ens.sigma_tilde->value);
  c.gate = ens.particles.col(0).unaryExpr(ens.beta->value);
  c.q.resize(features.rows());
  const double scale = ens.alpha / M;
  for (Eigen::Index p = 0; p < features.rows(); ++p) {
    // Sequential order keeps antithetic pairs cancelling exactly.
    double acc = 0.0;
    for (int i = 0; i < M; ++i) acc += ens.b_beta * c.gate(i) * c.hidden(p, i);
    c.q(p) = scale * acc;
  }
  return c;
}

Table q_table_from_ensemble(const ParticleEnsemble& ens, const TabularMdp& mdp) {
  return unflatten(forward_pass(ens, mdp.features()).q, mdp.n_states(), mdp.n_actions());
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string ensemble_to_text(const ParticleEnsemble& ens) {
  std::ostringstream os;
  char buf[64];
  os << "mfac-ensemble 1\n";
  os << "m " << ens.m() << " dim " << ens.param_dim();
  std::snprintf(buf, sizeof buf, "%.17g", ens.alpha);
  os << " alpha " << buf;
  std::snprintf(buf, sizeof buf, "%.17g", ens.b_beta);
  os << " b_beta " << buf << " seed " << ens.seed << " beta " << ens.beta->name
     << " sigma " << ens.sigma_tilde->name << '\n';
  for (int i = 0; i < ens.m(); ++i) {
    for (int k = 0; k < ens.param_dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", ens.particles(i, k));
      os << (k ? " " : "") << buf;
    }
    os << '\n';
  }
  return os.str();
}

ParticleEnsemble ensemble_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string magic, key;
  int version = 0;
  is >> magic >> version;
  if (magic != "mfac-ensemble" || version != 1) throw InputError("not an mfac-ensemble file");
  ParticleEnsemble ens;
  int m = 0, dim = 0;
  std::string beta_name, sigma_name;
  auto expect = [&](const char* k) {
    is >> key;
    if (key != k) throw InputError(std::string("ensemble header: expected '") + k + "'");
  };
  expect("m"); is >> m;
  expect("dim"); is >> dim;
  expect("alpha"); is >> ens.alpha;
  expect("b_beta"); is >> ens.b_beta;
  expect("seed"); is >> ens.seed;
  expect("beta"); is >> beta_name;
  expect("sigma"); is >> sigma_name;
  if (!is || m < 1 || dim < 3) throw InputError("malformed ensemble header");
  ens.beta = &activation_by_name(beta_name);
  ens.sigma_tilde = &activation_by_name(sigma_name);
  ens.particles.resize(m, dim);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < dim; ++k) {
      std::string tok;
      if (!(is >> tok)) throw InputError("ensemble file truncated");
      ens.particles(i, k) = std::strtod(tok.c_str(), nullptr);
    }
  ens.validate();
  return ens;
}

void save_ensemble(const ParticleEnsemble& ens, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << ensemble_to_text(ens);
}

ParticleEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ensemble_from_text(buf.str());
}

}  // namespace mfac
