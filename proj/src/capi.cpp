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

#include "mfac/error.hpp"
#include "mfac/harness.hpp"
#include "mfac/representable.hpp"
#include "mfac/selfcheck.hpp"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

struct mfac_mdp {
  mfac::BenchmarkMdp bench;
};

struct mfac_config {
  mfac::ExperimentConfig cfg;
};

struct mfac_result {
  mfac::RunResult result;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
mfac_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return MFAC_OK;
  } catch (const mfac::InputError& e) {
    g_last_error = e.what();
    return MFAC_ERR_INPUT;
  } catch (const mfac::NumericalError& e) {
    g_last_error = e.what();
    return MFAC_ERR_NUMERICAL;
  } catch (const mfac::DomainError& e) {
    g_last_error = e.what();
    return MFAC_ERR_DOMAIN;
  } catch (const mfac::InvariantViolation& e) {
    g_last_error = e.what();
    return MFAC_ERR_INVARIANT;
  } catch (const std::ios_base::failure& e) {
    g_last_error = e.what();
    return MFAC_ERR_IO;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MFAC_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MFAC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MFAC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MFAC_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw mfac::InputError(std::string(what) + " must not be null");
}

void copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
  }
}

std::vector<mfac::SweepAxis> parse_sweep(const std::string& spec) {
  std::vector<mfac::SweepAxis> axes;
  std::stringstream groups(spec);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    const auto eq = group.find('=');
    if (eq == std::string::npos || eq == 0)
      throw mfac::InputError("sweep axis '" + group + "' is not name=v1,v2,...");
    mfac::SweepAxis ax{group.substr(0, eq), {}};
    std::stringstream vals(group.substr(eq + 1));
    std::string v;
    while (std::getline(vals, v, ',')) {
      size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(v, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != v.size())
        throw mfac::InputError("bad sweep value '" + v + "' for axis " + ax.name);
      ax.values.push_back(x);
    }
    if (ax.values.empty()) throw mfac::InputError("sweep axis " + ax.name + " has no values");
    axes.push_back(std::move(ax));
  }
  return axes;
}

}  // namespace

extern "C" {

const char* mfac_version(void) { return "0.1.0"; }

const char* mfac_last_error(void) { return g_last_error.c_str(); }

const char* mfac_status_name(mfac_status status) {
  switch (status) {
    case MFAC_OK: return "ok";
    case MFAC_ERR_INPUT: return "input error";
    case MFAC_ERR_NUMERICAL: return "numerical error";
    case MFAC_ERR_DOMAIN: return "domain error";
    case MFAC_ERR_INVARIANT: return "invariant violation";
    case MFAC_ERR_IO: return "i/o error";
    case MFAC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mfac_status mfac_mdp_load(const char* path, mfac_mdp** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mfac_mdp{{path, mfac::load_mdp(path), std::nullopt}};
  });
}

mfac_status mfac_mdp_benchmark(const char* name, mfac_mdp** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new mfac_mdp{mfac::benchmark_mdp(name)};
  });
}

mfac_status mfac_mdp_from_config(const mfac_config* cfg, mfac_mdp** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = new mfac_mdp{mfac::mdp_from_config(cfg->cfg)};
  });
}

mfac_status mfac_mdp_generate_representable(int n_states, int n_actions, double gamma,
                                            uint64_t seed, mfac_mdp** out) {
  return guarded([&] {
    require(out, "out");
    mfac::GeneratedMdp g = mfac::generate_representable_mdp(n_states, n_actions, gamma, seed);
    *out = new mfac_mdp{{"generated", std::move(g.mdp), std::move(g.spec)}};
  });
}

mfac_status mfac_mdp_save(const mfac_mdp* mdp, const char* path) {
  return guarded([&] {
    require(mdp, "mdp");
    require(path, "path");
    mfac::save_mdp(mdp->bench.mdp, path);
  });
}

mfac_status mfac_mdp_shape(const mfac_mdp* mdp, int* n_states, int* n_actions, double* gamma) {
  return guarded([&] {
    require(mdp, "mdp");
    if (n_states) *n_states = mdp->bench.mdp.n_states();
    if (n_actions) *n_actions = mdp->bench.mdp.n_actions();
    if (gamma) *gamma = mdp->bench.mdp.gamma();
  });
}

mfac_status mfac_mdp_optimal_return(const mfac_mdp* mdp, double* j_star) {
  return guarded([&] {
    require(mdp, "mdp");
    require(j_star, "j_star");
    *j_star = mfac::expected_return(mdp->bench.mdp, mfac::optimal_policy(mdp->bench.mdp));
  });
}

void mfac_mdp_free(mfac_mdp* mdp) { delete mdp; }

mfac_status mfac_config_default(mfac_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new mfac_config{};
  });
}

mfac_status mfac_config_load(const char* path, mfac_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mfac_config{mfac::load_config(path)};
  });
}

mfac_status mfac_config_parse(const char* json, mfac_config** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new mfac_config{mfac::config_from_json(json)};
  });
}

mfac_status mfac_config_set_seed(mfac_config* cfg, uint64_t seed) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.seed = seed;
  });
}

mfac_status mfac_config_set_output(mfac_config* cfg, const char* dir) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.output_dir = dir ? dir : "";
  });
}

mfac_status mfac_config_set_sweep(mfac_config* cfg, const char* spec) {
  return guarded([&] {
    require(cfg, "cfg");
    require(spec, "spec");
    cfg->cfg.sweep_axes = parse_sweep(spec);
  });
}

mfac_status mfac_config_to_json(const mfac_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(cfg, "cfg");
    copy_out(mfac::config_to_json(cfg->cfg), buf, cap, needed);
  });
}

void mfac_config_free(mfac_config* cfg) { delete cfg; }

mfac_status mfac_run(const mfac_config* cfg, mfac_result** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    auto* r = new mfac_result{mfac::run_experiment(cfg->cfg)};
    if (!cfg->cfg.output_dir.empty()) {
      try {
        mfac::write_run_outputs(r->result, cfg->cfg.output_dir);
      } catch (...) {
        delete r;
        throw;
      }
    }
    *out = r;
  });
}

mfac_status mfac_result_summary(const mfac_result* result, mfac_run_summary* out) {
  return guarded([&] {
    require(result, "result");
    require(out, "out");
    const mfac::RunResult& r = result->result;
    const mfac::MetricsRow& last = r.rows.back();
    out->iterations = r.header.iterations;
    out->j_star = r.header.j_star;
    out->final_j = last.j;
    out->final_gap = last.gap;
    out->avg_gap = r.final_avg_gap;
    out->policy_eval_error = last.policy_eval_error;
    out->zeta = r.header.zeta;
    out->kappa = r.header.kappa;
    out->bound_residual = r.bound_residual;
    out->restarts = last.restart_count;
  });
}

mfac_status mfac_result_metrics_csv(const mfac_result* result, char* buf, size_t cap,
                                    size_t* needed) {
  return guarded([&] {
    require(result, "result");
    copy_out(mfac::metrics_csv(result->result), buf, cap, needed);
  });
}

mfac_status mfac_result_write(const mfac_result* result, const char* dir) {
  return guarded([&] {
    require(result, "result");
    require(dir, "dir");
    mfac::write_run_outputs(result->result, dir);
  });
}

void mfac_result_free(mfac_result* result) { delete result; }

mfac_status mfac_sweep(const mfac_config* cfg, int threads, const char* out_dir, int* n_cells) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto cells =
        mfac::sweep(cfg->cfg, cfg->cfg.sweep_axes, threads, out_dir ? out_dir : "");
    if (n_cells) *n_cells = static_cast<int>(cells.size());
  });
}

mfac_status mfac_verify(uint64_t seed, mfac_line_callback cb, void* user, int* n_failed) {
  return guarded([&] {
    int failed = 0;
    mfac::run_selfcheck(seed, [&](const mfac::CheckResult& r) {
      if (!r.passed) ++failed;
      if (cb) {
        const std::string line =
            std::string(r.passed ? "PASS " : "FAIL ") + r.name + ": " + r.detail;
        cb(line.c_str(), user);
      }
    });
    if (n_failed) *n_failed = failed;
  });
}

mfac_status mfac_fit(const mfac_mdp* mdp, int n_atoms, uint64_t seed, const char* out_path,
                     double* residual, int* conforming) {
  return guarded([&] {
    require(mdp, "mdp");
    const mfac::RepresentableSpec spec =
        mfac::fit_representation(mdp->bench.mdp, n_atoms, seed, mfac::kFitTolerance);
    if (out_path) {
      std::ofstream out(out_path);
      if (!(out << mfac::spec_to_json(spec) << '\n'))
        throw std::ios_base::failure(std::string("cannot write ") + out_path);
    }
    if (residual) *residual = spec.fit_residual();
    if (conforming) *conforming = spec.conforming ? 1 : 0;
  });
}

}  // extern "C"
