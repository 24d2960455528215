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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace {

const char* kSmall = R"({"seed": 2, "mdp": {"benchmark": "bench5x3"},
  "actor": {"eps": 0.05, "t_end": 0.5}, "td": {"eta": 4},
  "ensemble": {"m": 16}, "policy_init": "random"})";

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(mfac_status_name(MFAC_OK)) == "ok");
  CHECK(std::strlen(mfac_version()) > 0);
  mfac_mdp* mdp = nullptr;
  CHECK(mfac_mdp_benchmark("missing", &mdp) == MFAC_ERR_INPUT);
  CHECK(mdp == nullptr);
  CHECK(std::strlen(mfac_last_error()) > 0);
  CHECK(mfac_mdp_benchmark(nullptr, &mdp) == MFAC_ERR_INPUT);
  CHECK(mfac_mdp_load("/nonexistent/x.json", &mdp) != MFAC_OK);
  mfac_config* cfg = nullptr;
  CHECK(mfac_config_parse("{\"ensemble\": {\"alpha\": 0.1}}", &cfg) == MFAC_ERR_INPUT);
  CHECK(cfg == nullptr);
  mfac_mdp_free(nullptr);
  mfac_config_free(nullptr);
  mfac_result_free(nullptr);
}

TEST_CASE("mdp handles") {
  mfac_mdp* mdp = nullptr;
  REQUIRE(mfac_mdp_benchmark("bench8x4", &mdp) == MFAC_OK);
  int s = 0, a = 0;
  double gamma = 0.0, j = 0.0;
  CHECK(mfac_mdp_shape(mdp, &s, &a, &gamma) == MFAC_OK);
  CHECK(s == 8);
  CHECK(a == 4);
  CHECK(gamma == 0.9);
  CHECK(mfac_mdp_optimal_return(mdp, &j) == MFAC_OK);
  CHECK(j > 0.0);

  const auto path = (std::filesystem::temp_directory_path() / "mfac_capi_mdp.json").string();
  CHECK(mfac_mdp_save(mdp, path.c_str()) == MFAC_OK);
  mfac_mdp* back = nullptr;
  REQUIRE(mfac_mdp_load(path.c_str(), &back) == MFAC_OK);
  double j2 = 0.0;
  mfac_mdp_optimal_return(back, &j2);
  CHECK(j2 == j);
  std::filesystem::remove(path);

  mfac_mdp* gen = nullptr;
  REQUIRE(mfac_mdp_generate_representable(3, 2, 0.8, 5, &gen) == MFAC_OK);
  double residual = 1.0;
  int conforming = 0;
  const auto spec = (std::filesystem::temp_directory_path() / "mfac_capi_spec.json").string();
  CHECK(mfac_fit(gen, 24, 1, spec.c_str(), &residual, &conforming) == MFAC_OK);
  CHECK(conforming == 1);
  CHECK(residual <= 1e-3);
  CHECK(std::filesystem::exists(spec));
  std::filesystem::remove(spec);

  mfac_mdp_free(gen);
  mfac_mdp_free(back);
  mfac_mdp_free(mdp);
}

TEST_CASE("config and run") {
  mfac_config* cfg = nullptr;
  REQUIRE(mfac_config_parse(kSmall, &cfg) == MFAC_OK);
  size_t need = 0;
  CHECK(mfac_config_to_json(cfg, nullptr, 0, &need) == MFAC_OK);
  std::vector<char> buf(need + 1);
  CHECK(mfac_config_to_json(cfg, buf.data(), buf.size(), &need) == MFAC_OK);
  mfac_config* again = nullptr;
  CHECK(mfac_config_parse(buf.data(), &again) == MFAC_OK);
  mfac_config_free(again);

  mfac_result* r1 = nullptr;
  mfac_result* r2 = nullptr;
  REQUIRE(mfac_run(cfg, &r1) == MFAC_OK);
  REQUIRE(mfac_run(cfg, &r2) == MFAC_OK);
  mfac_run_summary s1{}, s2{};
  CHECK(mfac_result_summary(r1, &s1) == MFAC_OK);
  CHECK(mfac_result_summary(r2, &s2) == MFAC_OK);
  CHECK(s1.iterations == 10);
  CHECK(s1.avg_gap == s2.avg_gap);
  CHECK(s1.final_gap >= -1e-9);
  CHECK(s1.restarts == 0);

  size_t n = 0;
  CHECK(mfac_result_metrics_csv(r1, nullptr, 0, &n) == MFAC_OK);
  std::string csv(n, '\0');
  CHECK(mfac_result_metrics_csv(r1, csv.data(), n + 1, &n) == MFAC_OK);
  CHECK(csv.find("avg_gap") != std::string::npos);

  const auto dir = (std::filesystem::temp_directory_path() / "mfac_capi_run").string();
  std::filesystem::remove_all(dir);
  CHECK(mfac_result_write(r1, dir.c_str()) == MFAC_OK);
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "metrics.csv"));
  std::filesystem::remove_all(dir);

  CHECK(mfac_config_set_seed(cfg, 99) == MFAC_OK);
  mfac_result* r3 = nullptr;
  REQUIRE(mfac_run(cfg, &r3) == MFAC_OK);
  mfac_run_summary s3{};
  mfac_result_summary(r3, &s3);
  CHECK(s3.avg_gap != s1.avg_gap);

  mfac_result_free(r3);
  mfac_result_free(r2);
  mfac_result_free(r1);
  mfac_config_free(cfg);
}

TEST_CASE("sweep through the C API") {
  mfac_config* cfg = nullptr;
  REQUIRE(mfac_config_parse(kSmall, &cfg) == MFAC_OK);
  CHECK(mfac_config_set_sweep(cfg, "alpha=1,2;eta=1,4") == MFAC_OK);
  CHECK(mfac_config_set_sweep(cfg, "alpha=") == MFAC_ERR_INPUT);
  CHECK(mfac_config_set_sweep(cfg, "alpha=1,2;eta=1,4") == MFAC_OK);
  const auto dir = (std::filesystem::temp_directory_path() / "mfac_capi_sweep").string();
  std::filesystem::remove_all(dir);
  int cells = 0;
  CHECK(mfac_sweep(cfg, 2, dir.c_str(), &cells) == MFAC_OK);
  CHECK(cells == 4);
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "summary.csv"));
  std::filesystem::remove_all(dir);
  mfac_config_free(cfg);
}

TEST_CASE("verify reports every check") {
  std::vector<std::string> lines;
  int failed = -1;
  auto cb = [](const char* line, void* user) {
    static_cast<std::vector<std::string>*>(user)->push_back(line);
  };
  CHECK(mfac_verify(1, cb, &lines, &failed) == MFAC_OK);
  CHECK(failed == 0);
  CHECK(lines.size() >= 8);
}
