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

#include "mfac/mfac.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

int fail(mfac_status st, const char* what) {
  std::fprintf(stderr, "mfac: %s: %s: %s\n", what, mfac_status_name(st), mfac_last_error());
  return static_cast<int>(st);
}

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment config (JSON)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "override the run seed")->check(CLI::NonNegativeNumber);
  app->add_option("--out", c.out, "output directory");
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

mfac_status load(const Common& c, mfac_config** cfg) {
  mfac_status st = c.config.empty() ? mfac_config_default(cfg) : mfac_config_load(c.config.c_str(), cfg);
  if (st != MFAC_OK) return st;
  if (c.seed >= 0 && (st = mfac_config_set_seed(*cfg, static_cast<uint64_t>(c.seed))) != MFAC_OK)
    return st;
  if (!c.out.empty() && (st = mfac_config_set_output(*cfg, c.out.c_str())) != MFAC_OK) return st;
  return MFAC_OK;
}

int cmd_run(const Common& c) {
  mfac_config* cfg = nullptr;
  mfac_status st = load(c, &cfg);
  if (st != MFAC_OK) return fail(st, "config");
  mfac_result* res = nullptr;
  st = mfac_run(cfg, &res);
  mfac_config_free(cfg);
  if (st != MFAC_OK) return fail(st, "run");
  mfac_run_summary s{};
  mfac_result_summary(res, &s);
  std::printf("iterations %ld\nJ* %.10g\nfinal J %.10g\nfinal gap %.6g\ntime-average gap %.6g\n"
              "policy evaluation error %.6g\nzeta %.6g\nkappa %.6g\nrestarts %d\n",
              s.iterations, s.j_star, s.final_j, s.final_gap, s.avg_gap, s.policy_eval_error,
              s.zeta, s.kappa, s.restarts);
  if (c.out.empty()) {
    size_t need = 0;
    mfac_result_metrics_csv(res, nullptr, 0, &need);
    std::vector<char> buf(need);
    mfac_result_metrics_csv(res, buf.data(), buf.size(), &need);
    std::fputs(buf.data(), stdout);
  } else {
    std::printf("outputs written to %s\n", c.out.c_str());
  }
  mfac_result_free(res);
  return 0;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& axes) {
  mfac_config* cfg = nullptr;
  mfac_status st = load(c, &cfg);
  if (st != MFAC_OK) return fail(st, "config");
  if (!axes.empty()) {
    std::string spec;
    for (const auto& a : axes) spec += a + ";";
    if ((st = mfac_config_set_sweep(cfg, spec.c_str())) != MFAC_OK) {
      mfac_config_free(cfg);
      return fail(st, "sweep axes");
    }
  }
  int n = 0;
  st = mfac_sweep(cfg, c.threads, c.out.c_str(), &n);
  mfac_config_free(cfg);
  if (st != MFAC_OK) return fail(st, "sweep");
  std::printf("%d cells written to %s\n", n, c.out.c_str());
  return 0;
}

int cmd_verify(const Common& c) {
  std::vector<std::string> lines;
  auto cb = [](const char* line, void* user) {
    std::puts(line);
    std::fflush(stdout);
    static_cast<std::vector<std::string>*>(user)->push_back(line);
  };
  int failed = 0;
  const mfac_status st =
      mfac_verify(c.seed >= 0 ? static_cast<uint64_t>(c.seed) : 0, cb, &lines, &failed);
  if (st != MFAC_OK) return fail(st, "verify");
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    std::ofstream out(std::filesystem::path(c.out) / "verify.txt");
    for (const auto& l : lines) out << l << '\n';
  }
  std::printf("%d of %zu checks failed\n", failed, lines.size());
  return failed == 0 ? 0 : 1;
}

int cmd_fit(const Common& c, const std::string& mdp_path, const std::string& benchmark,
            int atoms) {
  mfac_mdp* mdp = nullptr;
  mfac_status st;
  if (!mdp_path.empty()) {
    st = mfac_mdp_load(mdp_path.c_str(), &mdp);
  } else if (!benchmark.empty()) {
    st = mfac_mdp_benchmark(benchmark.c_str(), &mdp);
  } else {
    mfac_config* cfg = nullptr;
    st = load(c, &cfg);
    if (st == MFAC_OK) st = mfac_mdp_from_config(cfg, &mdp);
    mfac_config_free(cfg);
  }
  if (st != MFAC_OK) return fail(st, "mdp");
  std::string out_path;
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    out_path = (std::filesystem::path(c.out) / "representable.json").string();
  }
  double residual = 0.0;
  int conforming = 0;
  st = mfac_fit(mdp, atoms, c.seed >= 0 ? static_cast<uint64_t>(c.seed) : 0,
                out_path.empty() ? nullptr : out_path.c_str(), &residual, &conforming);
  mfac_mdp_free(mdp);
  if (st != MFAC_OK) return fail(st, "fit");
  std::printf("fit residual %.3e (%s)\n", residual, conforming ? "conforming" : "not conforming");
  if (!out_path.empty()) std::printf("spec written to %s\n", out_path.c_str());
  return conforming ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field actor-critic simulator"};
  app.set_version_flag("--version", std::string(mfac_version()));
  app.require_subcommand(1);

  Common run_opts, sweep_opts, verify_opts, fit_opts;
  auto* run = app.add_subcommand("run", "run one experiment config");
  add_common(run, run_opts, true);

  auto* sw = app.add_subcommand("sweep", "run a parameter grid");
  add_common(sw, sweep_opts, true);
  sw->get_option("--out")->required();
  std::vector<std::string> axes;
  sw->add_option("--axis", axes, "grid axis, e.g. alpha=1,4,16 (repeatable)");

  auto* verify = app.add_subcommand("verify", "run the consistency suite");
  add_common(verify, verify_opts, false);

  auto* fit = app.add_subcommand("fit", "fit a representable description to an MDP");
  add_common(fit, fit_opts, false);
  std::string mdp_path, benchmark;
  int atoms = 48;
  fit->add_option("--mdp", mdp_path, "MDP file")->check(CLI::ExistingFile);
  fit->add_option("--benchmark", benchmark, "benchmark name (bench5x3, bench8x4, bench20x5)");
  fit->add_option("--atoms", atoms, "dictionary size")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(run_opts);
  if (sw->parsed()) return cmd_sweep(sweep_opts, axes);
  if (verify->parsed()) return cmd_verify(verify_opts);
  return cmd_fit(fit_opts, mdp_path, benchmark, atoms);
}
