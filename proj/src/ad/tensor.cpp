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

#include "espi/ad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "espi/ad/tape.hpp"

namespace espi::ad {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > 2) throw ShapeMismatch("tensor rank must be 1 or 2");
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty() || shape_.size() > 2) throw ShapeMismatch("tensor rank must be 1 or 2");
  if (data_.size() != product(shape_))
    throw ShapeMismatch("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                        shape_string(shape_));
}

Tensor Tensor::vector(std::initializer_list<double> values) { return vector(std::vector<double>(values)); }

Tensor Tensor::vector(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add(const Tensor& other) {
  if (other.size() != size()) throw ShapeMismatch("add: " + shape_string(shape_) + " vs " + shape_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

// ---------------------------------------------------------------------------

ParamId ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  auto id = static_cast<ParamId>(params_.size());
  index_.emplace(name, id);
  params_.push_back(Parameter{std::move(name), std::move(value)});
  return id;
}

std::optional<ParamId> ParameterSet::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParameterSet::at(const std::string& name) const {
  auto id = find(name);
  if (!id) throw std::out_of_range("no parameter named " + name);
  return *id;
}

std::size_t ParameterSet::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

GradBuffer::GradBuffer(const ParameterSet& params) : params_(&params), grads_(params.size()) {}

Tensor& GradBuffer::at(ParamId id) {
  auto i = static_cast<std::size_t>(id);
  if (grads_.size() < params_->size()) grads_.resize(params_->size());
  if (grads_[i].empty()) grads_[i] = Tensor::zeros_like((*params_)[id].value);
  return grads_[i];
}

const Tensor* GradBuffer::find(ParamId id) const {
  auto i = static_cast<std::size_t>(id);
  if (i >= grads_.size() || grads_[i].empty()) return nullptr;
  return &grads_[i];
}

void GradBuffer::clear() {
  for (auto& g : grads_) g.fill(0.0);
}

void GradBuffer::add(const GradBuffer& other) {
  for (std::size_t i = 0; i < other.grads_.size(); ++i)
    if (!other.grads_[i].empty()) at(static_cast<ParamId>(i)).add(other.grads_[i]);
}

void GradBuffer::scale(double factor) {
  for (auto& g : grads_)
    for (double& v : g.values()) v *= factor;
}

// ---------------------------------------------------------------------------

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(ParamId id) {
  Node n;
  n.ref = &(*params_)[id].value;
  n.param = id;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, std::vector<int> inputs, Backward backward, bool sparse_param_sink) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = sparse_param_sink;
  for (int in : inputs) n.needs_grad = n.needs_grad || needs_grad(in);
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  return n.ref ? *n.ref : n.owned;
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.ref ? *n.ref : n.owned);
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor* Tape::grad_if_any(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  return n.has_grad ? &n.grad : nullptr;
}

Tensor& Tape::param_grad(ParamId id) {
  if (!sink_) throw std::logic_error("param_grad outside backward()");
  return sink_->at(id);
}

void Tape::backward(Var output, GradBuffer& into) {
  if (value(output).size() != 1) throw ShapeMismatch("backward needs a single-element output");
  sink_ = &into;
  grad(output.id)[0] += 1.0;
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.needs_grad) continue;
    if (n.param) {
      into.at(*n.param).add(n.grad);
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
  sink_ = nullptr;
}

}  // namespace espi::ad
