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

#include "mfac/representable.hpp"

#include "mfac/critic.hpp"
#include "mfac/error.hpp"
#include "mfac/quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace mfac {
namespace {

constexpr double kAtomStddev = 0.5;
constexpr double kAtomMeanScale = 1.5;

double atom_value(const Eigen::VectorXd& mean, double stddev,
                  const Eigen::Ref<const Eigen::VectorXd>& x, const Activation& act) {
  return gauss_hermite_64().gaussian_expectation(act.value, mean.dot(x), stddev * x.norm());
}

double atom_slope(const Eigen::VectorXd& mean, double stddev,
                  const Eigen::Ref<const Eigen::VectorXd>& x, const Activation& act) {
  return gauss_hermite_64().gaussian_expectation(act.derivative, mean.dot(x),
                                                 stddev * x.norm());
}

// Lawson–Hanson nonnegative least squares: min |A x - b| subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<char> passive(n, 0);
  const double tol = 1e-13 * std::max(1.0, A.cwiseAbs().maxCoeff()) *
                     std::max(1.0, b.cwiseAbs().maxCoeff());
  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(k) = A.col(idx[k]);
    const Eigen::VectorXd zs = sub.completeOrthogonalDecomposition().solve(b);
    z.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zs(k);
  };
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const Eigen::VectorXd grad = A.transpose() * (b - A * x);
    Eigen::Index best = -1;
    double best_val = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[j] && grad(j) > best_val) {
        best_val = grad(j);
        best = j;
      }
    if (best < 0) break;
    passive[best] = 1;
    Eigen::VectorXd z;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z(j) <= 0.0) feasible = false;
      if (feasible) break;
      double step = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z(j) <= 0.0) step = std::min(step, x(j) / (x(j) - z(j)));
      x += step * (z - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && x(j) <= 1e-15) {
          passive[j] = 0;
          x(j) = 0.0;
        }
    }
    x = z.cwiseMax(0.0);
  }
  return x;
}

struct Dictionary {
  std::vector<Eigen::VectorXd> means;  // signed: reflections included
  Eigen::MatrixXd values;              // pairs x atoms
};

Dictionary make_dictionary(const TabularMdp& mdp, int n_atoms, Rng& rng,
                           const Activation& act) {
  std::normal_distribution<double> normal(0.0, kAtomMeanScale);
  const int W = mdp.input_dim() + 1;
  Dictionary dict;
  for (int j = 0; j < n_atoms; ++j) {
    Eigen::VectorXd m(W);
    for (int k = 0; k < W; ++k) m(k) = normal(rng);
    dict.means.push_back(m);
    dict.means.push_back(-m);
  }
  dict.values.resize(mdp.n_pairs(), static_cast<Eigen::Index>(dict.means.size()));
  for (std::size_t j = 0; j < dict.means.size(); ++j)
    for (int p = 0; p < mdp.n_pairs(); ++p)
      dict.values(p, static_cast<Eigen::Index>(j)) =
          atom_value(dict.means[j], kAtomStddev, mdp.features().row(p).transpose(), act);
  return dict;
}

struct AtomFit {
  std::vector<Eigen::VectorXd> means;
  std::vector<double> amplitudes;  // nonnegative
  double residual = 0.0;           // max abs
};

Eigen::VectorXd evaluate_fit(const AtomFit& fit, const TabularMdp& mdp,
                             const Activation& act) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mdp.n_pairs());
  for (std::size_t j = 0; j < fit.means.size(); ++j)
    for (int p = 0; p < mdp.n_pairs(); ++p)
      out(p) += fit.amplitudes[j] *
                atom_value(fit.means[j], kAtomStddev, mdp.features().row(p).transpose(), act);
  return out;
}

// Levenberg–Marquardt over the means of the active atoms, amplitudes fixed.
void refine_means(AtomFit& fit, const TabularMdp& mdp, const Eigen::VectorXd& target,
                  const Activation& act) {
  if (fit.means.empty()) return;
  const int W = mdp.input_dim() + 1;
  const int P = mdp.n_pairs();
  const auto n_atoms = static_cast<int>(fit.means.size());
  double lambda = 1e-3;
  Eigen::VectorXd err = evaluate_fit(fit, mdp, act) - target;
  for (int it = 0; it < 100 && err.cwiseAbs().maxCoeff() > 1e-13; ++it) {
    Eigen::MatrixXd J(P, n_atoms * W);
    for (int j = 0; j < n_atoms; ++j)
      for (int p = 0; p < P; ++p) {
        const Eigen::VectorXd x = mdp.features().row(p).transpose();
        J.block(p, j * W, 1, W) =
            (fit.amplitudes[j] * atom_slope(fit.means[j], kAtomStddev, x, act)) * x.transpose();
      }
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * err;
    bool accepted = false;
    for (int tries = 0; tries < 10 && !accepted; ++tries) {
      Eigen::MatrixXd damped = H;
      damped.diagonal().array() += lambda * (1.0 + H.diagonal().array());
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      AtomFit trial = fit;
      for (int j = 0; j < n_atoms; ++j) trial.means[j] += step.segment(j * W, W);
      const Eigen::VectorXd trial_err = evaluate_fit(trial, mdp, act) - target;
      if (trial_err.squaredNorm() < err.squaredNorm()) {
        fit = std::move(trial);
        err = trial_err;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }
  fit.residual = err.cwiseAbs().maxCoeff();
}

AtomFit fit_target(const Dictionary& dict, const Eigen::VectorXd& target,
                   const TabularMdp& mdp, const Activation& act) {
  const Eigen::VectorXd amp = nnls(dict.values, target);
  AtomFit fit;
  for (Eigen::Index j = 0; j < amp.size(); ++j)
    if (amp(j) > 0.0) {
      fit.means.push_back(dict.means[static_cast<std::size_t>(j)]);
      fit.amplitudes.push_back(amp(j));
    }
  fit.residual = (dict.values * amp - target).cwiseAbs().maxCoeff();
  if (fit.residual > 1e-12 * std::max(1.0, target.cwiseAbs().maxCoeff()))
    refine_means(fit, mdp, target, act);
  return fit;
}

// Converts an atom fit into (scale, probability mixture).
std::pair<double, MeasureMixture> to_mixture(const AtomFit& fit, const Eigen::VectorXd& fallback_mean) {
  const double total = std::accumulate(fit.amplitudes.begin(), fit.amplitudes.end(), 0.0);
  if (!(total > 0.0)) return {0.0, MeasureMixture::symmetric_pair(fallback_mean, kAtomStddev)};
  MeasureMixture mix;
  for (std::size_t j = 0; j < fit.means.size(); ++j)
    mix.components.push_back({fit.amplitudes[j] / total, fit.means[j], kAtomStddev});
  return {total, std::move(mix)};
}

double gaussian_log_density(const Eigen::Ref<const Eigen::VectorXd>& w,
                            const Eigen::VectorXd& mean, double stddev) {
  const double k = static_cast<double>(w.size());
  return -0.5 * (w - mean).squaredNorm() / (stddev * stddev) -
         k * std::log(stddev) - 0.5 * k * std::log(2.0 * std::numbers::pi);
}

}  // namespace

// ---------------------------------------------------------------------------
// MeasureMixture

double MeasureMixture::total_weight() const {
  double t = 0.0;
  for (const auto& c : components) t += c.weight;
  return t;
}

int MeasureMixture::dim() const {
  return components.empty() ? 0 : static_cast<int>(components.front().mean.size());
}

void MeasureMixture::validate(bool probability) const {
  if (components.empty()) throw InvariantViolation("mixture has no components");
  for (const auto& c : components) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
      throw InvariantViolation("mixture weights must be finite and nonnegative");
    if (!(c.stddev > 0.0)) throw InvariantViolation("mixture stddev must be positive");
    if (c.mean.size() != dim() || !c.mean.allFinite())
      throw InvariantViolation("mixture means must be finite and share one dimension");
  }
  if (probability && std::abs(total_weight() - 1.0) > 1e-12)
    throw InvariantViolation("probability mixture has mass " + std::to_string(total_weight()));
}

double MeasureMixture::expect_activation(const Eigen::Ref<const Eigen::VectorXd>& x,
                                         const Activation& act) const {
  double acc = 0.0;
  for (const auto& c : components)
    if (c.weight != 0.0) acc += c.weight * atom_value(c.mean, c.stddev, x, act);
  return acc;
}

Eigen::VectorXd MeasureMixture::sample(Rng& rng) const {
  std::vector<double> w;
  for (const auto& c : components) w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& c = components[pick(rng)];
  Eigen::VectorXd out(c.mean.size());
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = c.mean(k) + c.stddev * normal(rng);
  return out;
}

double MeasureMixture::density(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  const double total = total_weight();
  double acc = 0.0;
  for (const auto& c : components)
    acc += c.weight / total * std::exp(gaussian_log_density(w, c.mean, c.stddev));
  return acc;
}

MeasureMixture MeasureMixture::symmetric_pair(const Eigen::VectorXd& mean, double stddev) {
  MeasureMixture mix;
  mix.components.push_back({0.5, mean, stddev});
  mix.components.push_back({0.5, -mean, stddev});
  return mix;
}

// ---------------------------------------------------------------------------
// Representable specs

double RepresentableSpec::min_b_beta(double gamma) const {
  return 2.0 * (b_r + gamma / (1.0 - gamma) * b_r * phi.sum());
}

Table represented_reward(const RepresentableSpec& spec, const TabularMdp& mdp) {
  Eigen::VectorXd r(mdp.n_pairs());
  for (int p = 0; p < mdp.n_pairs(); ++p)
    r(p) = spec.b_r * spec.mu.expect_activation(mdp.features().row(p).transpose(),
                                                *spec.activation);
  return unflatten(r, mdp.n_states(), mdp.n_actions());
}

Eigen::MatrixXd represented_kernel(const RepresentableSpec& spec, const TabularMdp& mdp) {
  if (static_cast<int>(spec.psi.size()) != mdp.n_states() || spec.phi.size() != mdp.n_states())
    throw InputError("spec does not match the number of states");
  Eigen::MatrixXd k(mdp.n_pairs(), mdp.n_states());
  for (int p = 0; p < mdp.n_pairs(); ++p)
    for (int s2 = 0; s2 < mdp.n_states(); ++s2)
      k(p, s2) = spec.phi(s2) * spec.psi[s2].expect_activation(
                                    mdp.features().row(p).transpose(), *spec.activation);
  return k;
}

RepresentableSpec fit_representation(const TabularMdp& mdp, int n_atoms, std::uint64_t seed,
                                     double tolerance) {
  if (n_atoms < 1) throw InputError("fit_representation needs n_atoms >= 1");
  const Activation& act = tanh_activation();
  Rng rng(seed);
  const Dictionary dict = make_dictionary(mdp, n_atoms, rng, act);

  RepresentableSpec spec;
  spec.activation = &act;
  const AtomFit reward_fit = fit_target(dict, mdp.reward_vector(), mdp, act);
  auto [b_r, mu] = to_mixture(reward_fit, dict.means.front());
  // A vanishing reward keeps B_r = 1 with a symmetric mu.
  spec.b_r = b_r > 0.0 ? b_r : 1.0;
  spec.mu = std::move(mu);

  spec.phi.resize(mdp.n_states());
  for (int s2 = 0; s2 < mdp.n_states(); ++s2) {
    const AtomFit kfit = fit_target(dict, mdp.transition().col(s2), mdp, act);
    auto [scale, psi] = to_mixture(kfit, dict.means.front());
    spec.phi(s2) = scale;
    spec.psi.push_back(std::move(psi));
  }

  spec.reward_residual =
      (represented_reward(spec, mdp) - mdp.reward()).cwiseAbs().maxCoeff();
  spec.kernel_residual =
      (represented_kernel(spec, mdp) - mdp.transition()).cwiseAbs().maxCoeff();
  const double b_bar = std::max(spec.b_r, mdp.reward().maxCoeff());
  spec.b_beta = 2.0 * (b_bar + mdp.gamma() / (1.0 - mdp.gamma()) * b_bar * spec.phi.sum());
  spec.conforming = spec.fit_residual() <= tolerance;
  return spec;
}

GeneratedMdp generate_representable_mdp(int n_states, int n_actions, double gamma,
                                        std::uint64_t seed, double b_r) {
  if (n_states < 1 || n_actions < 1) throw InputError("need at least one state and action");
  if (!(b_r > 0.0)) throw InputError("B_r must be positive");
  const Activation& act = tanh_activation();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  const Eigen::MatrixXd emb = default_embedding(n_states, n_actions);
  const int d = static_cast<int>(emb.cols());
  const int W = d + 1;

  RepresentableSpec spec;
  spec.b_r = b_r;
  // mu: means (u, c) with c > 0.9 |u| keep w^T x > 0 on the grid, so r > 0.
  {
    std::vector<double> wts(3);
    for (auto& w : wts) w = expo(rng);
    const double tot = std::accumulate(wts.begin(), wts.end(), 0.0);
    for (double w : wts) {
      Eigen::VectorXd m(W);
      for (int k = 0; k < d; ++k) m(k) = 0.7 * normal(rng);
      m(d) = 0.9 * m.head(d).norm() + 0.2 + 0.6 * unif(rng);
      spec.mu.components.push_back({w / tot, m, kAtomStddev});
    }
  }

  // psi: a shared "constant" atom along the bias coordinate plus, for paired
  // next states, reflected atoms +/- m whose contributions cancel in each
  // row sum. Equal feature norms make the constant atom exactly constant.
  Eigen::VectorXd bias_mean = Eigen::VectorXd::Zero(W);
  bias_mean(d) = 2.0;
  constexpr double kMix = 0.3;
  const Eigen::VectorXd x0 = [&] {
    Eigen::VectorXd x(W);
    x.head(d) = emb.row(0).transpose();
    x(d) = 1.0;
    return x;
  }();
  const double g_c = atom_value(bias_mean, kAtomStddev, x0, act);

  const int n_groups = (n_states + 1) / 2;
  std::vector<double> group_share(n_groups);
  for (auto& g : group_share) g = expo(rng) + 0.2;
  const double share_total = std::accumulate(group_share.begin(), group_share.end(), 0.0);

  spec.phi.resize(n_states);
  spec.psi.resize(n_states);
  for (int g = 0; g < n_groups; ++g) {
    const int s1 = 2 * g;
    const int s2 = s1 + 1;
    const double share = group_share[g] / share_total;
    if (s2 < n_states) {
      Eigen::VectorXd m(W);
      for (int k = 0; k < W; ++k) m(k) = normal(rng);
      for (int s : {s1, s2}) {
        const double sign = s == s1 ? 1.0 : -1.0;
        spec.psi[s].components = {{1.0 - kMix, bias_mean, kAtomStddev},
                                  {kMix, sign * m, kAtomStddev}};
        spec.phi(s) = 0.5 * share / ((1.0 - kMix) * g_c);
      }
    } else {
      spec.psi[s1].components = {{1.0, bias_mean, kAtomStddev}};
      spec.phi(s1) = share / g_c;
    }
  }

  Eigen::VectorXd d0 = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
  // Placeholder kernel/reward to obtain features, then evaluate the mixtures.
  Eigen::MatrixXd uniform_kernel = Eigen::MatrixXd::Constant(n_states * n_actions, n_states,
                                                             1.0 / n_states);
  TabularMdp scaffold(uniform_kernel, Table::Zero(n_states, n_actions), gamma, d0, emb);
  Table reward = represented_reward(spec, scaffold);
  Eigen::MatrixXd kernel = represented_kernel(spec, scaffold);
  for (Eigen::Index p = 0; p < kernel.rows(); ++p) {
    const double row = kernel.row(p).sum();
    if (std::abs(row - 1.0) > 1e-10 || (kernel.row(p).array() < 0.0).any())
      throw NumericalError("generated kernel row is not a distribution");
    kernel.row(p) /= row;
  }
  TabularMdp mdp(std::move(kernel), std::move(reward), gamma, std::move(d0), emb);
  spec.reward_residual = (represented_reward(spec, mdp) - mdp.reward()).cwiseAbs().maxCoeff();
  spec.kernel_residual =
      (represented_kernel(spec, mdp) - mdp.transition()).cwiseAbs().maxCoeff();
  spec.b_beta = spec.min_b_beta(gamma);
  spec.conforming = true;
  return {std::move(mdp), std::move(spec)};
}

// ---------------------------------------------------------------------------
// Mollifier

double mollified_beta(double z, double eps, const Activation& beta) {
  if (!(eps > 0.0)) throw DomainError("mollifier width must be positive");
  return gauss_hermite_64().gaussian_expectation(beta.value, z, eps);
}

double mollified_beta_inverse(double y, double eps, const Activation& beta) {
  double lo = -kInverseBracket;
  double hi = kInverseBracket;
  const double f_lo = mollified_beta(lo, eps, beta);
  const double f_hi = mollified_beta(hi, eps, beta);
  if (!(y >= f_lo && y <= f_hi))
    throw DomainError("mollified inverse target " + std::to_string(y) +
                      " outside the verified range");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mollified_beta(mid, eps, beta) < y)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double default_mollifier_width() {
  const double root = std::sqrt(std::numbers::pi / 2.0);
  const double l0 = 1.0;                                   // sup |tanh'|
  const double l1 = 4.0 / (3.0 * std::sqrt(3.0));          // sup |tanh''|
  const double ell = 1.0 / (1.0 - (2.0 / 3.0) * (2.0 / 3.0));  // (artanh)' at 2/3
  return std::min({1.0, root / (6.0 * l0), root / (2.0 * ell * l1)});
}

// ---------------------------------------------------------------------------
// rho_pi

RhoPi construct_rho_pi(const RepresentableSpec& spec, const TabularMdp& mdp,
                       const Policy& policy, double alpha) {
  if (!spec.conforming) throw InputError("construct_rho_pi needs a conforming spec");
  if (!(alpha >= 1.0)) throw InputError("alpha must be >= 1");
  if (spec.phi.size() != mdp.n_states()) throw InputError("spec/mdp state count mismatch");
  const Eigen::VectorXd v = exact_v(mdp, policy);
  const double gamma = mdp.gamma();
  RhoPi rho;
  rho.alpha = alpha;
  rho.b_beta = spec.b_beta;
  rho.z_pi = spec.b_r + gamma * spec.phi.dot(v);
  if (std::abs(rho.z_pi / spec.b_beta) > 0.5)
    throw InvariantViolation("|Z_pi / B_beta| = " + std::to_string(rho.z_pi / spec.b_beta) +
                             " exceeds 1/2");
  for (const auto& c : spec.mu.components)
    rho.nu_pi.components.push_back({spec.b_r * c.weight / rho.z_pi, c.mean, c.stddev});
  for (int s2 = 0; s2 < mdp.n_states(); ++s2) {
    const double mass = gamma * spec.phi(s2) * v(s2) / rho.z_pi;
    if (mass <= 0.0) continue;
    for (const auto& c : spec.psi[s2].components)
      rho.nu_pi.components.push_back({mass * c.weight, c.mean, c.stddev});
  }
  rho.nu_pi.validate(true);
  rho.p_stddev = default_mollifier_width();
  rho.p_mean = mollified_beta_inverse(rho.z_pi / spec.b_beta, rho.p_stddev, tanh_activation());
  return rho;
}

RepresentationCheck verify_representation(const RhoPi& rho, const RepresentableSpec& spec,
                                          const TabularMdp& mdp, const Policy& policy,
                                          long n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw InputError("verify_representation needs n_samples >= 2");
  const Activation& act = *spec.activation;
  const int P = mdp.n_pairs();
  const int W = mdp.input_dim() + 1;
  const Eigen::MatrixXd& X = mdp.features();

  std::vector<double> cw;
  for (const auto& c : rho.nu_pi.components) cw.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(cw.begin(), cw.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Rng rng(seed);

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(P);
  constexpr long kChunk = 4096;
  Eigen::MatrixXd w(kChunk, W);
  Eigen::VectorXd gate(kChunk);
  for (long done = 0; done < n_samples; done += kChunk) {
    const long n = std::min(kChunk, n_samples - done);
    for (long i = 0; i < n; ++i) {
      const auto& c = rho.nu_pi.components[pick(rng)];
      for (int k = 0; k < W; ++k) w(i, k) = c.mean(k) + c.stddev * normal(rng);
      const double b = rho.p_mean + rho.p_stddev * normal(rng);
      gate(i) = rho.b_beta * tanh_activation().value(b);
    }
    const Eigen::MatrixXd pre = w.topRows(n) * X.transpose();  // n x P
    for (long i = 0; i < n; ++i)
      for (int p = 0; p < P; ++p) {
        const double sigma = gate(i) * act.value(pre(i, p));
        sum(p) += sigma;
        sum_sq(p) += sigma * sigma;
      }
  }
  const double nd = static_cast<double>(n_samples);
  const Eigen::VectorXd mean = sum / nd;
  const Eigen::VectorXd var =
      ((sum_sq / nd - mean.cwiseAbs2()) * (nd / (nd - 1.0))).cwiseMax(0.0);

  RepresentationCheck out;
  out.q_estimate = unflatten(mean, mdp.n_states(), mdp.n_actions());
  out.q_exact = exact_q(mdp, policy);
  out.sigma_mc = unflatten((var / nd).cwiseSqrt(), mdp.n_states(), mdp.n_actions());
  out.max_error = (out.q_estimate - out.q_exact).cwiseAbs().maxCoeff();
  out.mc_radius = 3.0 * out.sigma_mc.maxCoeff();
  return out;
}

double vector_field_at_rho_pi(const RhoPi& rho, const TabularMdp& mdp, const Policy& policy,
                              const Table& q_table, const Eigen::MatrixXd& probe_points,
                              const Table& base) {
  const Weighting weighting = weighting_distribution(mdp, policy, base);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < probe_points.rows(); ++k) {
    const Eigen::VectorXd g = td_vector_field(probe_points.row(k).transpose(), q_table,
                                              rho.alpha, rho.b_beta, mdp, policy,
                                              weighting.sampling);
    worst = std::max(worst, g.norm());
  }
  return worst;
}

double chi_squared_vs_standard(const MeasureMixture& mix, long n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InputError("chi-squared estimate needs samples");
  Rng rng(seed);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(mix.dim());
  double acc = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd w = mix.sample(rng);
    acc += mix.density(w) / std::exp(gaussian_log_density(w, origin, 1.0));
  }
  return acc / static_cast<double>(n_samples) - 1.0;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json mixture_to_json(const MeasureMixture& mix) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : mix.components)
    arr.push_back({{"weight", c.weight},
                   {"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                   {"stddev", c.stddev}});
  return arr;
}

MeasureMixture mixture_from_json(const nlohmann::json& arr) {
  MeasureMixture mix;
  for (const auto& c : arr) {
    const auto mean = c.at("mean").get<std::vector<double>>();
    mix.components.push_back({c.at("weight").get<double>(),
                              Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                                static_cast<Eigen::Index>(mean.size())),
                              c.at("stddev").get<double>()});
  }
  return mix;
}

}  // namespace

std::string spec_to_json(const RepresentableSpec& spec) {
  nlohmann::json j;
  j["format"] = "mfac-representable";
  j["version"] = 1;
  j["activation"] = std::string(spec.activation->name);
  j["b_r"] = spec.b_r;
  j["b_beta"] = spec.b_beta;
  j["phi"] = std::vector<double>(spec.phi.data(), spec.phi.data() + spec.phi.size());
  j["mu"] = mixture_to_json(spec.mu);
  nlohmann::json psi = nlohmann::json::array();
  for (const auto& m : spec.psi) psi.push_back(mixture_to_json(m));
  j["psi"] = std::move(psi);
  j["reward_residual"] = spec.reward_residual;
  j["kernel_residual"] = spec.kernel_residual;
  j["conforming"] = spec.conforming;
  return j.dump(1);
}

RepresentableSpec spec_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "mfac-representable")
      throw InputError("not an mfac-representable document");
    RepresentableSpec spec;
    spec.activation = &activation_by_name(j.at("activation").get<std::string>());
    spec.b_r = j.at("b_r").get<double>();
    spec.b_beta = j.at("b_beta").get<double>();
    const auto phi = j.at("phi").get<std::vector<double>>();
    spec.phi = Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Eigen::Index>(phi.size()));
    spec.mu = mixture_from_json(j.at("mu"));
    for (const auto& m : j.at("psi")) spec.psi.push_back(mixture_from_json(m));
    spec.reward_residual = j.at("reward_residual").get<double>();
    spec.kernel_residual = j.at("kernel_residual").get<double>();
    spec.conforming = j.at("conforming").get<bool>();
    spec.mu.validate(true);
    for (const auto& m : spec.psi) m.validate(true);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed representable spec: ") + e.what());
  }
}

}  // namespace mfac
