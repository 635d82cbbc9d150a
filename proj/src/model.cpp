/* Copyright 2026 The ESPI Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "espi/model.hpp"

#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

namespace espi {

void HyperParams::validate() const {
  auto need = [](bool ok, const char* name) {
    if (!ok) throw std::invalid_argument(std::string("hyperparameter must be positive: ") + name);
  };
  need(d_model > 0, "d_model");
  need(hidden > 0, "hidden");
  need(k > 0, "k");
  need(r > 0.0, "r");
  need(hops >= 0, "hops");  // zero hops is a supported configuration
  need(max_path_len >= 2, "max_path_len");
  need(lr > 0.0, "lr");
  need(patience > 0, "patience");
  need(batch > 0, "batch");
  need(max_epochs > 0, "max_epochs");
}

Vocab::Vocab() {
  add("<unk>");
  add("<pad>");
}

int Vocab::add(std::string_view token) {
  std::string key(token);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != "<unk>" || tokens[1] != "<pad>")
    throw std::invalid_argument("vocabulary must start with <unk>, <pad>");
  Vocab v;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw std::invalid_argument("duplicate vocabulary entry: " + tokens[i]);
    v.add(tokens[i]);
  }
  return v;
}

std::vector<std::string> split_subtokens(std::string_view value) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  auto cls = [](char c) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isdigit(u)) return 1;
    if (std::isupper(u)) return 2;
    if (std::islower(u)) return 3;
    return 0;
  };
  for (std::size_t i = 0; i < value.size(); ++i) {
    const char c = value[i];
    const int k = cls(c);
    if (k == 0) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      const int prev = cls(value[i - 1]);
      bool split = false;
      if ((prev == 1) != (k == 1)) split = true;                // letter/digit boundary
      else if (prev == 3 && k == 2) split = true;               // camelCase
      else if (prev == 2 && k == 2 && i + 1 < value.size() &&   // HTTPServer
               cls(value[i + 1]) == 3)
        split = true;
      if (split) flush();
    }
    cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  flush();
  if (out.empty()) {
    std::string whole;
    for (char c : value) whole.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    out.push_back(std::move(whole));
  }
  return out;
}

std::string normalize_message_token(std::string_view token) {
  std::string s(token);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(const HyperParams& hp,
                                                                             std::size_t n_types,
                                                                             std::size_t n_subtokens,
                                                                             std::size_t n_message_tokens) {
  const auto d = static_cast<std::size_t>(hp.d_model);
  const auto h = static_cast<std::size_t>(hp.hidden);
  return {
      {"emb.type", {n_types, d}},
      {"emb.subtoken", {n_subtokens, d}},
      {"emb.message", {n_message_tokens, h}},
      {"path.lstm_fwd.w", {4 * h, d + h}},
      {"path.lstm_fwd.b", {4 * h}},
      {"path.lstm_bwd.w", {4 * h, d + h}},
      {"path.lstm_bwd.b", {4 * h}},
      {"path.fc.w", {d, 2 * d + 2 * h}},
      {"path.fc.b", {d}},
      {"path.ln.gamma", {d}},
      {"path.ln.beta", {d}},
      {"msg.gru.wx", {3 * h, h}},
      {"msg.gru.bx", {3 * h}},
      {"msg.gru.uzr", {2 * h, h}},
      {"msg.gru.un", {h, h}},
      {"msg.fc.w", {d, h}},
      {"msg.fc.b", {d}},
      {"out.fc.w", {1, 2 * d}},
      {"out.fc.b", {1}},
  };
}

namespace {

// Uniform in [-limit, limit] from raw engine bits, identical on every
// standard library.
double uniform(std::mt19937_64& rng, double limit) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * limit;
}

}  // namespace

Model init_model(const HyperParams& hp, Vocab node_types, Vocab subtokens, Vocab message_tokens, std::uint64_t seed) {
  hp.validate();
  Model m;
  m.hp = hp;
  std::mt19937_64 rng(seed);
  for (auto& [name, shape] : parameter_layout(hp, node_types.size(), subtokens.size(), message_tokens.size())) {
    ad::Tensor t(shape);
    const bool embedding = name.rfind("emb.", 0) == 0;
    if (name == "path.ln.gamma") {
      t.fill(1.0);
    } else if (embedding) {
      for (double& x : t.values()) x = uniform(rng, 0.05);
    } else if (shape.size() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (double& x : t.values()) x = uniform(rng, limit);
    }
    m.params.add(name, std::move(t));
  }
  m.node_types = std::move(node_types);
  m.subtokens = std::move(subtokens);
  m.message_tokens = std::move(message_tokens);
  m.ids = bind_params(m.params, hp);
  return m;
}

ModelParams bind_params(const ad::ParameterSet& p, const HyperParams& hp) {
  const auto h = static_cast<std::size_t>(hp.hidden);
  ModelParams ids;
  ids.type_emb = p.at("emb.type");
  ids.subtoken_emb = p.at("emb.subtoken");
  ids.message_emb = p.at("emb.message");
  ids.path_fwd = {p.at("path.lstm_fwd.w"), p.at("path.lstm_fwd.b"), h};
  ids.path_bwd = {p.at("path.lstm_bwd.w"), p.at("path.lstm_bwd.b"), h};
  ids.path_fc_w = p.at("path.fc.w");
  ids.path_fc_b = p.at("path.fc.b");
  ids.path_ln_gamma = p.at("path.ln.gamma");
  ids.path_ln_beta = p.at("path.ln.beta");
  ids.ggnn = {p.at("msg.gru.wx"), p.at("msg.gru.bx"), p.at("msg.gru.uzr"), p.at("msg.gru.un"), h};
  ids.msg_fc_w = p.at("msg.fc.w");
  ids.msg_fc_b = p.at("msg.fc.b");
  ids.out_w = p.at("out.fc.w");
  ids.out_b = p.at("out.fc.b");
  return ids;
}

}  // namespace espi
