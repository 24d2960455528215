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

#include "mfac/mdp.hpp"

#include "mfac/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace mfac {

using nlohmann::json;

std::string mdp_to_json(const TabularMdp& mdp) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  json j;
  j["format"] = "mfac-mdp";
  j["version"] = 1;
  j["n_states"] = S;
  j["n_actions"] = A;
  j["gamma"] = mdp.gamma();
  j["initial_dist"] = std::vector<double>(mdp.initial_dist().data(),
                                          mdp.initial_dist().data() + S);
  json reward = json::array(), transition = json::array(), embedding = json::array();
  for (int s = 0; s < S; ++s) {
    json r_row = json::array(), t_row = json::array(), e_row = json::array();
    for (int a = 0; a < A; ++a) {
      const int p = mdp.pair(s, a);
      r_row.push_back(mdp.reward()(s, a));
      json next = json::array();
      for (int s2 = 0; s2 < S; ++s2) next.push_back(mdp.transition()(p, s2));
      t_row.push_back(std::move(next));
      json vec = json::array();
      for (int k = 0; k < mdp.input_dim(); ++k) vec.push_back(mdp.embedding()(p, k));
      e_row.push_back(std::move(vec));
    }
    reward.push_back(std::move(r_row));
    transition.push_back(std::move(t_row));
    embedding.push_back(std::move(e_row));
  }
  j["reward"] = std::move(reward);
  j["transition"] = std::move(transition);
  j["embedding"] = std::move(embedding);
  return j.dump(1);
}

TabularMdp mdp_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("mdp file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "mfac-mdp") throw InputError("not an mfac-mdp document");
    const int S = j.at("n_states").get<int>();
    const int A = j.at("n_actions").get<int>();
    if (S < 1 || A < 1) throw InputError("n_states and n_actions must be positive");
    const auto& jr = j.at("reward");
    const auto& jt = j.at("transition");
    const auto& je = j.at("embedding");
    const auto& jd = j.at("initial_dist");
    if (jr.size() != std::size_t(S) || jt.size() != std::size_t(S) ||
        je.size() != std::size_t(S) || jd.size() != std::size_t(S))
      throw InputError("arrays must have n_states rows");
    const int d = static_cast<int>(je.at(0).at(0).size());
    Table reward(S, A);
    Eigen::MatrixXd trans(S * A, S), emb(S * A, d);
    Eigen::VectorXd d0(S);
    for (int s = 0; s < S; ++s) {
      d0(s) = jd.at(s).get<double>();
      if (jr.at(s).size() != std::size_t(A) || jt.at(s).size() != std::size_t(A) ||
          je.at(s).size() != std::size_t(A))
        throw InputError("arrays must have n_actions columns");
      for (int a = 0; a < A; ++a) {
        const int p = s * A + a;
        reward(s, a) = jr.at(s).at(a).get<double>();
        if (jt.at(s).at(a).size() != std::size_t(S))
          throw InputError("transition rows must have n_states entries");
        for (int s2 = 0; s2 < S; ++s2) trans(p, s2) = jt.at(s).at(a).at(s2).get<double>();
        if (je.at(s).at(a).size() != std::size_t(d))
          throw InputError("embedding vectors must share one dimension");
        for (int k = 0; k < d; ++k) emb(p, k) = je.at(s).at(a).at(k).get<double>();
      }
    }
    return TabularMdp(std::move(trans), std::move(reward), j.at("gamma").get<double>(),
                      std::move(d0), std::move(emb));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed mdp document: ") + e.what());
  }
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mdp file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return mdp_from_json(buf.str());
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write mdp file " + path);
  out << mdp_to_json(mdp) << '\n';
}

}  // namespace mfac
