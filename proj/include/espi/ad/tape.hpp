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

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "espi/ad/tensor.hpp"

namespace espi::ad {

using ParamId = int;

struct Parameter {
  std::string name;
  Tensor value;
};

/// Named trainable tensors. Ids are stable for the lifetime of the set.
class ParameterSet {
 public:
  ParamId add(std::string name, Tensor value);
  std::size_t size() const { return params_.size(); }
  Parameter& operator[](ParamId id) { return params_.at(static_cast<std::size_t>(id)); }
  const Parameter& operator[](ParamId id) const { return params_.at(static_cast<std::size_t>(id)); }
  std::optional<ParamId> find(const std::string& name) const;
  ParamId at(const std::string& name) const;
  std::size_t total_values() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, ParamId> index_;
};

/// Gradients for a ParameterSet, allocated on first touch. Independent
/// buffers let independent tapes run concurrently.
class GradBuffer {
 public:
  explicit GradBuffer(const ParameterSet& params);

  Tensor& at(ParamId id);
  const Tensor* find(ParamId id) const;
  void clear();
  void add(const GradBuffer& other);
  void scale(double factor);
  std::size_t size() const { return grads_.size(); }

 private:
  const ParameterSet* params_;
  std::vector<Tensor> grads_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode gradient tape. Operations are recorded in execution order;
/// backward() visits them strictly in reverse and accumulates parameter
/// gradients additively into a GradBuffer.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(const ParameterSet& params) : params_(&params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(ParamId id);

  /// Records an operation node. `backward` runs only when the node received
  /// a gradient and it needs one: some input does, or `sparse_param_sink`
  /// marks an op that writes parameter gradients directly.
  Var record(Tensor value, std::vector<int> inputs, Backward backward, bool sparse_param_sink = false);

  const Tensor& value(Var v) const;
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  bool needs_grad(Var v) const { return needs_grad(v.id); }

  /// Gradient accumulator of a node, zero-allocated on first access.
  Tensor& grad(int id);
  const Tensor* grad_if_any(Var v) const;

  /// Direct access to the parameter gradient during backward() (used by
  /// sparse lookups that bypass a dense leaf).
  Tensor& param_grad(ParamId id);
  const ParameterSet& params() const { return *params_; }

  /// Per-node integer side data (e.g. argmax rows of a max-pool).
  std::vector<int>& aux(Var v) { return nodes_[static_cast<std::size_t>(v.id)].aux; }
  const std::vector<int>& aux(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].aux; }

  /// Seeds d(output)/d(output) = 1 for a single-element output.
  void backward(Var output, GradBuffer& into);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;  // parameter leaves alias the parameter value
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::optional<ParamId> param;
    std::vector<int> inputs;
    std::vector<int> aux;
    Backward backward;
  };

  const ParameterSet* params_;
  std::vector<Node> nodes_;
  GradBuffer* sink_ = nullptr;
};

}  // namespace espi::ad
