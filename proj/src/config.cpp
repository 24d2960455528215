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

#include "mfac/error.hpp"
#include "mfac/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mfac {

double ExperimentConfig::resolved_eta() const {
  if (eps_prime && actor.eps_actor > 0.0) return *eps_prime / actor.eps_actor;
  if (eta_preset.empty()) return td.eta;
  if (eta_preset == "alpha^1.5") return std::pow(ensemble.alpha, 1.5);
  throw InputError("unknown eta preset '" + eta_preset + "'");
}

double ExperimentConfig::resolved_eps_prime() const {
  if (eps_prime) return *eps_prime;
  return resolved_eta() * actor.eps_actor;
}

long ExperimentConfig::resolved_iterations() const {
  if (iterations > 0) return iterations;
  const double dt = mode != RunMode::kTdFixedPolicy && actor.eps_actor > 0.0
                        ? actor.eps_actor
                        : resolved_eps_prime();
  if (!(dt > 0.0)) throw InputError("cannot derive an iteration count without a stepsize");
  const double ratio = actor.t_end / dt;
  const long k = std::lround(ratio);
  if (k < 1) throw InputError("t_end / stepsize must round to at least one iteration");
  if (std::abs(ratio - static_cast<double>(k)) > 1e-6 * std::max(1.0, ratio))
    throw InputError("t_end is not an integer multiple of the stepsize");
  return k;
}

void ExperimentConfig::validate() const {
  if (!(actor.eps_actor >= 0.0) || !std::isfinite(actor.eps_actor))
    throw InputError("eps must be finite and nonnegative");
  if (!(actor.t_end >= 0.0) || !std::isfinite(actor.t_end))
    throw InputError("t_end must be finite and nonnegative");
  if (eps_prime && (!(*eps_prime >= 0.0) || !std::isfinite(*eps_prime)))
    throw InputError("eps_prime must be finite and nonnegative");
  if (!(resolved_eta() >= 0.0) || !std::isfinite(resolved_eta()))
    throw InputError("eta must be finite and nonnegative");
  if (mode == RunMode::kTdFixedPolicy && !(resolved_eps_prime() > 0.0))
    throw InputError("fixed-policy TD needs a positive critic stepsize");
  if (mode == RunMode::kMfPpoExact && !(actor.eps_actor > 0.0))
    throw InputError("exact-Q PPO needs a positive actor stepsize");
  if (iterations < 0) throw InputError("iterations must be nonnegative");
  resolved_iterations();
  if (metrics_every < 1) throw InputError("metrics_every must be >= 1");
  if (ensemble.m < 1) throw InputError("ensemble size must be >= 1");
  if (ensemble.antithetic && ensemble.m % 2 != 0)
    throw InputError("antithetic initialization needs an even ensemble size");
  if (!(ensemble.alpha >= 1.0)) throw InputError("alpha must be >= 1");
  if (ensemble.b_beta < 0.0) throw InputError("B_beta must be nonnegative");
  if (td.batch < 1) throw InputError("TD batch must be >= 1");
  if (restart.enabled) {
    if (restart.check_every < 1) throw InputError("restart check cadence must be >= 1");
    if (restart.threshold < 0.0) throw InputError("restart threshold must be nonnegative");
    if (restart.threshold == 0.0 && !(restart.threshold_factor > 0.0))
      throw InputError("restart threshold factor must be positive");
  }
  if ((restart.enabled || track_w2) && restart.estimator == W2Estimator::kExact &&
      ensemble.m > kMaxExactSamples)
    throw InputError("exact W2 supports at most " + std::to_string(kMaxExactSamples) +
                     " particles; use the sliced estimator");
  if (random_states > 0 && random_actions < 1)
    throw InputError("random mdp needs at least one action");
}

namespace {

using nlohmann::json;

RunMode mode_from(const std::string& s) {
  if (s == "two_timescale") return RunMode::kTwoTimescale;
  if (s == "mf_ppo_exact") return RunMode::kMfPpoExact;
  if (s == "td_fixed_policy") return RunMode::kTdFixedPolicy;
  throw InputError("unknown mode '" + s + "'");
}

std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::kTwoTimescale: return "two_timescale";
    case RunMode::kMfPpoExact: return "mf_ppo_exact";
    case RunMode::kTdFixedPolicy: return "td_fixed_policy";
  }
  return "two_timescale";
}

W2Estimator estimator_from(const std::string& s) {
  if (s == "exact") return W2Estimator::kExact;
  if (s == "sliced") return W2Estimator::kSliced;
  throw InputError("unknown W2 estimator '" + s + "'");
}

double number_or_inf(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw InputError("expected a number or \"inf\", got '" + s + "'");
  }
  return v.get<double>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [k, _] : obj.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw InputError(std::string("unknown key '") + k + "' in " + where);
  }
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(text);
    reject_unknown(j,
                   {"mode", "seed", "mdp", "actor", "td", "eta_preset", "iterations", "ensemble",
                    "restart", "base_dist", "policy_init", "metrics_every", "track_w2",
                    "oracle_critic", "record_wall_time", "output", "sweep"},
                   "config");
    cfg.mode = mode_from(j.value("mode", "two_timescale"));
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("mdp")) {
      const json& m = j.at("mdp");
      reject_unknown(m, {"benchmark", "file", "random"}, "mdp");
      if (m.size() != 1) throw InputError("mdp needs exactly one of benchmark/file/random");
      if (m.contains("benchmark")) cfg.benchmark = m.at("benchmark").get<std::string>();
      if (m.contains("file")) cfg.mdp_path = m.at("file").get<std::string>();
      if (m.contains("random")) {
        const json& r = m.at("random");
        reject_unknown(r, {"states", "actions", "gamma", "seed"}, "mdp.random");
        cfg.random_states = r.at("states").get<int>();
        cfg.random_actions = r.at("actions").get<int>();
        cfg.random_gamma = r.value("gamma", 0.9);
        cfg.random_seed = r.value("seed", std::uint64_t{0});
        if (cfg.random_states < 1) throw InputError("random mdp needs at least one state");
      }
    }
    if (j.contains("actor")) {
      const json& a = j.at("actor");
      reject_unknown(a, {"eps", "t_end"}, "actor");
      cfg.actor.eps_actor = a.value("eps", cfg.actor.eps_actor);
      cfg.actor.t_end = a.value("t_end", cfg.actor.t_end);
    }
    if (j.contains("td")) {
      const json& t = j.at("td");
      reject_unknown(t, {"eta", "eps_prime", "mode", "batch"}, "td");
      cfg.td.eta = t.value("eta", cfg.td.eta);
      if (t.contains("eps_prime")) {
        cfg.eps_prime = t.at("eps_prime").get<double>();
        if (t.contains("eta") && cfg.actor.eps_actor > 0.0 &&
            std::abs(*cfg.eps_prime - cfg.td.eta * cfg.actor.eps_actor) >
                1e-12 * std::max(1.0, *cfg.eps_prime))
          throw InputError("td.eps_prime is inconsistent with eta * eps");
      }
      const std::string tm = t.value("mode", "expected");
      if (tm == "expected") cfg.td.mode = TdMode::kExpected;
      else if (tm == "stochastic") cfg.td.mode = TdMode::kStochastic;
      else throw InputError("unknown td mode '" + tm + "'");
      cfg.td.batch = t.value("batch", cfg.td.batch);
    }
    cfg.eta_preset = j.value("eta_preset", std::string());
    cfg.iterations = j.value("iterations", 0L);
    if (j.contains("ensemble")) {
      const json& e = j.at("ensemble");
      reject_unknown(e, {"m", "alpha", "b_beta", "antithetic"}, "ensemble");
      cfg.ensemble.m = e.value("m", cfg.ensemble.m);
      cfg.ensemble.alpha = e.value("alpha", cfg.ensemble.alpha);
      cfg.ensemble.b_beta = e.value("b_beta", cfg.ensemble.b_beta);
      cfg.ensemble.antithetic = e.value("antithetic", cfg.ensemble.antithetic);
    }
    if (j.contains("restart")) {
      const json& r = j.at("restart");
      reject_unknown(r, {"enabled", "threshold", "threshold_factor", "check_every", "estimator"},
                     "restart");
      cfg.restart.enabled = r.value("enabled", true);
      if (r.contains("threshold")) cfg.restart.threshold = number_or_inf(r.at("threshold"));
      cfg.restart.threshold_factor = r.value("threshold_factor", cfg.restart.threshold_factor);
      cfg.restart.check_every = r.value("check_every", cfg.restart.check_every);
      cfg.restart.estimator = estimator_from(r.value("estimator", "exact"));
    }
    if (j.contains("base_dist")) {
      const json& b = j.at("base_dist");
      if (b.is_string()) {
        if (b.get<std::string>() != "uniform") throw InputError("base_dist must be uniform or {file}");
      } else {
        reject_unknown(b, {"file"}, "base_dist");
        cfg.base_path = b.at("file").get<std::string>();
      }
    }
    cfg.policy_init = j.value("policy_init", cfg.policy_init);
    cfg.metrics_every = j.value("metrics_every", cfg.metrics_every);
    cfg.track_w2 = j.value("track_w2", false);
    cfg.oracle_critic = j.value("oracle_critic", false);
    cfg.record_wall_time = j.value("record_wall_time", false);
    cfg.output_dir = j.value("output", std::string());
    if (j.contains("sweep")) {
      for (const auto& [name, values] : j.at("sweep").items())
        cfg.sweep_axes.push_back({name, values.get<std::vector<double>>()});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["mode"] = mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  if (!cfg.mdp_path.empty()) {
    j["mdp"] = {{"file", cfg.mdp_path}};
  } else if (cfg.random_states > 0) {
    j["mdp"] = {{"random",
                 {{"states", cfg.random_states},
                  {"actions", cfg.random_actions},
                  {"gamma", cfg.random_gamma},
                  {"seed", cfg.random_seed}}}};
  } else {
    j["mdp"] = {{"benchmark", cfg.benchmark}};
  }
  j["actor"] = {{"eps", cfg.actor.eps_actor}, {"t_end", cfg.actor.t_end}};
  j["td"] = {{"eta", cfg.td.eta},
             {"mode", cfg.td.mode == TdMode::kExpected ? "expected" : "stochastic"},
             {"batch", cfg.td.batch}};
  if (cfg.eps_prime) {
    j["td"].erase("eta");
    j["td"]["eps_prime"] = *cfg.eps_prime;
  }
  if (!cfg.eta_preset.empty()) j["eta_preset"] = cfg.eta_preset;
  if (cfg.iterations > 0) j["iterations"] = cfg.iterations;
  j["ensemble"] = {{"m", cfg.ensemble.m},
                   {"alpha", cfg.ensemble.alpha},
                   {"b_beta", cfg.ensemble.b_beta},
                   {"antithetic", cfg.ensemble.antithetic}};
  json r = {{"enabled", cfg.restart.enabled},
            {"threshold_factor", cfg.restart.threshold_factor},
            {"check_every", cfg.restart.check_every},
            {"estimator", cfg.restart.estimator == W2Estimator::kExact ? "exact" : "sliced"}};
  if (std::isinf(cfg.restart.threshold)) r["threshold"] = "inf";
  else if (cfg.restart.threshold > 0.0) r["threshold"] = cfg.restart.threshold;
  j["restart"] = std::move(r);
  if (cfg.base_path.empty()) j["base_dist"] = "uniform";
  else j["base_dist"] = {{"file", cfg.base_path}};
  j["policy_init"] = cfg.policy_init;
  j["metrics_every"] = cfg.metrics_every;
  j["track_w2"] = cfg.track_w2;
  j["oracle_critic"] = cfg.oracle_critic;
  j["record_wall_time"] = cfg.record_wall_time;
  if (!cfg.output_dir.empty()) j["output"] = cfg.output_dir;
  if (!cfg.sweep_axes.empty()) {
    json sw = json::object();
    for (const auto& ax : cfg.sweep_axes) sw[ax.name] = ax.values;
    j["sweep"] = std::move(sw);
  }
  return j.dump(2);
}

}  // namespace mfac
