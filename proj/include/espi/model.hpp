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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "espi/ad/recurrent.hpp"
#include "espi/hash.hpp"

namespace espi {

struct HyperParams {
  int d_model = 128;
  int hidden = 128;
  int k = 500;
  double r = 1.0;
  int hops = 4;
  int max_path_len = 16;
  double lr = 0.001;
  int patience = 10;
  int batch = 32;
  int max_epochs = 100;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument naming the first non-positive field.
  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

/// Token vocabulary with "<unk>" at 0 and "<pad>" at 1.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kPad = 1;

  Vocab();

  int add(std::string_view token);
  /// Index of `token`, or kUnk.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Rebuilds from a stored token list; the reserved entries must be first.
  static Vocab from_tokens(std::vector<std::string> tokens);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Splits an identifier on underscores, other non-alphanumerics, case
/// transitions ("getBuffer", "HTTPServer") and letter/digit boundaries, then
/// lowercases. A value with no alphanumerics yields itself, lowercased.
std::vector<std::string> split_subtokens(std::string_view value);

/// Message tokens are matched case-insensitively.
std::string normalize_message_token(std::string_view token);

struct ModelParams {
  ad::ParamId type_emb = -1;     // [node types x d]
  ad::ParamId subtoken_emb = -1;  // [subtokens x d]
  ad::ParamId message_emb = -1;   // [message tokens x hidden]
  ad::LstmParams path_fwd{};
  ad::LstmParams path_bwd{};
  ad::ParamId path_fc_w = -1;  // [d x (2d + 2H)]
  ad::ParamId path_fc_b = -1;
  ad::ParamId path_ln_gamma = -1;
  ad::ParamId path_ln_beta = -1;
  ad::GruParams ggnn{};
  ad::ParamId msg_fc_w = -1;  // [d x H]
  ad::ParamId msg_fc_b = -1;
  ad::ParamId out_w = -1;  // [1 x 2d]
  ad::ParamId out_b = -1;
};

struct Model {
  HyperParams hp;
  Vocab node_types;
  Vocab subtokens;
  Vocab message_tokens;
  ad::ParameterSet params;
  ModelParams ids;
};

/// Expected (name, shape) of every parameter, in canonical order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(const HyperParams& hp,
                                                                             std::size_t n_types,
                                                                             std::size_t n_subtokens,
                                                                             std::size_t n_message_tokens);

/// Builds parameters: Xavier-uniform matrices, zero biases, layer-norm gain
/// one, embeddings uniform in [-0.05, 0.05].
Model init_model(const HyperParams& hp, Vocab node_types, Vocab subtokens, Vocab message_tokens, std::uint64_t seed);

/// Resolves parameter ids by name (after loading).
ModelParams bind_params(const ad::ParameterSet& params, const HyperParams& hp);

}  // namespace espi
