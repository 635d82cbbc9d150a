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

#include "espi/ad/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>

namespace espi::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Tensor& x) {
  return MapC(x.data(), static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols()));
}
Map view(Tensor& x) { return Map(x.data(), static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols())); }

Tensor shaped_like_rows(const Tensor& like, std::size_t rows, std::size_t cols) {
  if (like.rank() == 1 && rows == 1) return Tensor({cols});
  return Tensor({rows, cols});
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

template <typename F, typename D>
Var unary_map(Tape& t, Var a, F f, D dfdy) {
  const Tensor& x = t.value(a);
  Tensor y = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return t.record(std::move(y), {a.id}, [a, dfdy](Tape& tp, int self) {
    if (!tp.needs_grad(a)) return;
    const Tensor& out = tp.value(Var{self});
    const Tensor& x = tp.value(a);
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdy(x[i], out[i]);
  });
}

}  // namespace

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Var linear(Tape& t, Var x, Var w, Var b) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  if (wv.rank() != 2 || wv.cols() != xv.cols())
    throw ShapeMismatch("linear: input " + shape_string(xv.shape()) + " vs weight " + shape_string(wv.shape()));
  const std::size_t n = xv.rows();
  const std::size_t k = wv.rows();
  if (b.valid() && t.value(b).size() != k)
    throw ShapeMismatch("linear: bias " + shape_string(t.value(b).shape()) + " vs weight " + shape_string(wv.shape()));
  Tensor y = shaped_like_rows(xv, n, k);
  view(y).noalias() = view(xv) * view(wv).transpose();
  if (b.valid()) {
    const Tensor& bv = t.value(b);
    auto yv = view(y);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < k; ++c) yv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += bv[c];
  }
  std::vector<int> inputs{x.id, w.id};
  if (b.valid()) inputs.push_back(b.id);
  return t.record(std::move(y), std::move(inputs), [x, w, b](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    if (tp.needs_grad(x)) view(tp.grad(x.id)).noalias() += view(g) * view(tp.value(w));
    if (tp.needs_grad(w)) view(tp.grad(w.id)).noalias() += view(g).transpose() * view(tp.value(x));
    if (b.valid() && tp.needs_grad(b)) {
      Tensor& gb = tp.grad(b.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g.at(r, c);
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same(av, bv, "add");
  Tensor y = av;
  y.add(bv);
  return t.record(std::move(y), {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    if (tp.needs_grad(a)) tp.grad(a.id).add(g);
    if (tp.needs_grad(b)) tp.grad(b.id).add(g);
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same(av, bv, "mul");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return t.record(std::move(y), {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad(a.id);
      const Tensor& bv = tp.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.needs_grad(b)) {
      Tensor& gb = tp.grad(b.id);
      const Tensor& av = tp.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Tape& t, Var a, double factor) {
  return unary_map(
      t, a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var one_minus(Tape& t, Var a) {
  return unary_map(
      t, a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Var sigmoid(Tape& t, Var a) {
  return unary_map(t, a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& t, Var a) {
  return unary_map(
      t, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sum_all(Tape& t, Var a) {
  double s = 0.0;
  for (double v : t.value(a).values()) s += v;
  return t.record(Tensor::vector({s}), {a.id}, [a](Tape& tp, int self) {
    if (!tp.needs_grad(a)) return;
    double g = tp.grad(self)[0];
    for (double& v : tp.grad(a.id).values()) v += g;
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
  const std::size_t rows = t.value(parts[0]).rows();
  bool all_vectors = true;
  std::size_t cols = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    if (v.rows() != rows) throw ShapeMismatch("concat_cols: row counts differ");
    all_vectors = all_vectors && v.rank() == 1;
    cols += v.cols();
  }
  Tensor y = all_vectors ? Tensor({cols}) : Tensor({rows, cols});
  std::size_t offset = 0;
  std::vector<int> inputs;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) y.at(r, offset + c) = v.at(r, c);
    offset += v.cols();
    inputs.push_back(p.id);
  }
  std::vector<Var> kept(parts.begin(), parts.end());
  return t.record(std::move(y), std::move(inputs), [kept](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    std::size_t offset = 0;
    for (Var p : kept) {
      const std::size_t w = tp.value(p).cols();
      if (tp.needs_grad(p)) {
        Tensor& gp = tp.grad(p.id);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) gp.at(r, c) += g.at(r, offset + c);
      }
      offset += w;
    }
  });
}

Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = t.value(a);
  if (begin + count > av.cols()) throw ShapeMismatch("slice_cols: range exceeds " + shape_string(av.shape()));
  Tensor y = shaped_like_rows(av, av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) y.at(r, c) = av.at(r, begin + c);
  return t.record(std::move(y), {a.id}, [a, begin, count](Tape& tp, int self) {
    if (!tp.needs_grad(a)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < count; ++c) ga.at(r, begin + c) += g.at(r, c);
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeMismatch("concat_rows: no inputs");
  const std::size_t cols = t.value(parts[0]).cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    if (t.value(p).cols() != cols) throw ShapeMismatch("concat_rows: column counts differ");
    rows += t.value(p).rows();
  }
  Tensor y({rows, cols});
  std::size_t offset = 0;
  std::vector<int> inputs;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    std::copy(v.data(), v.data() + v.size(), y.data() + offset * cols);
    offset += v.rows();
    inputs.push_back(p.id);
  }
  std::vector<Var> kept(parts.begin(), parts.end());
  return t.record(std::move(y), std::move(inputs), [kept](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    std::size_t offset = 0;
    for (Var p : kept) {
      const std::size_t n = tp.value(p).size();
      if (tp.needs_grad(p)) {
        Tensor& gp = tp.grad(p.id);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var gather_rows(Tape& t, Var a, std::span<const int> indices) {
  const Tensor& av = t.value(a);
  const std::size_t cols = av.cols();
  Tensor y({indices.size(), cols});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto r = static_cast<std::size_t>(indices[i]);
    if (indices[i] < 0 || r >= av.rows()) throw ShapeMismatch("gather_rows: row index out of range");
    std::copy_n(av.data() + r * cols, cols, y.data() + i * cols);
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return t.record(std::move(y), {a.id}, [a, idx = std::move(idx)](Tape& tp, int self) {
    if (!tp.needs_grad(a)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(a.id);
    const std::size_t cols = g.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* dst = ga.data() + static_cast<std::size_t>(idx[i]) * cols;
      const double* src = g.data() + i * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

namespace {

void check_vocab(const Tensor& table, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= table.rows())
    throw IndexOutOfVocab("embedding index " + std::to_string(index) + " outside vocabulary of " +
                          std::to_string(table.rows()));
}

}  // namespace

Var embedding_bags(Tape& t, ParamId table, const std::vector<std::vector<int>>& bags) {
  const Tensor& tv = t.params()[table].value;
  const std::size_t d = tv.cols();
  Tensor y({bags.size(), d});
  for (std::size_t i = 0; i < bags.size(); ++i) {
    for (int idx : bags[i]) {
      check_vocab(tv, idx);
      const double* src = tv.data() + static_cast<std::size_t>(idx) * d;
      for (std::size_t c = 0; c < d; ++c) y.at(i, c) += src[c];
    }
  }
  return t.record(
      std::move(y), {},
      [table, bags](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& gt = tp.param_grad(table);
        const std::size_t d = g.cols();
        for (std::size_t i = 0; i < bags.size(); ++i)
          for (int idx : bags[i]) {
            double* dst = gt.data() + static_cast<std::size_t>(idx) * d;
            for (std::size_t c = 0; c < d; ++c) dst[c] += g.at(i, c);
          }
      },
      /*sparse_param_sink=*/true);
}

Var embedding_rows(Tape& t, ParamId table, std::span<const int> indices) {
  std::vector<std::vector<int>> bags;
  bags.reserve(indices.size());
  for (int i : indices) bags.push_back({i});
  return embedding_bags(t, table, bags);
}

Var embed_lookup(Tape& t, ParamId table, int index) {
  const Tensor& tv = t.params()[table].value;
  check_vocab(tv, index);
  const std::size_t d = tv.cols();
  std::vector<double> row(tv.data() + static_cast<std::size_t>(index) * d,
                          tv.data() + static_cast<std::size_t>(index + 1) * d);
  return t.record(
      Tensor::vector(std::move(row)), {},
      [table, index](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& gt = tp.param_grad(table);
        double* dst = gt.data() + static_cast<std::size_t>(index) * g.size();
        for (std::size_t c = 0; c < g.size(); ++c) dst[c] += g[c];
      },
      /*sparse_param_sink=*/true);
}

Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = t.value(x);
  const std::size_t rows = xv.rows();
  const std::size_t d = xv.cols();
  if (d == 0) throw ShapeMismatch("layer_norm: empty feature dimension");
  if (t.value(gamma).size() != d || t.value(beta).size() != d)
    throw ShapeMismatch("layer_norm: gamma/beta size must equal " + std::to_string(d));
  const Tensor& gv = t.value(gamma);
  const Tensor& bv = t.value(beta);
  Tensor y = Tensor::zeros_like(xv);
  // Normalized values and reciprocal std per row, kept for backward.
  auto xhat = std::make_shared<Tensor>(Tensor::zeros_like(xv));
  auto rstd = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += xv.at(r, c);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xv.at(r, c) - mean) * (xv.at(r, c) - mean);
    var /= static_cast<double>(d);
    double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t c = 0; c < d; ++c) {
      double h = (xv.at(r, c) - mean) * rs;
      xhat->at(r, c) = h;
      y.at(r, c) = h * gv[c] + bv[c];
    }
  }
  return t.record(std::move(y), {x.id, gamma.id, beta.id}, [x, gamma, beta, xhat, rstd](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& gv = tp.value(gamma);
    const std::size_t rows = g.rows();
    const std::size_t d = g.cols();
    if (tp.needs_grad(gamma)) {
      Tensor& gg = tp.grad(gamma.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < d; ++c) gg[c] += g.at(r, c) * xhat->at(r, c);
    }
    if (tp.needs_grad(beta)) {
      Tensor& gb = tp.grad(beta.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < d; ++c) gb[c] += g.at(r, c);
    }
    if (tp.needs_grad(x)) {
      Tensor& gx = tp.grad(x.id);
      for (std::size_t r = 0; r < rows; ++r) {
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          double dh = g.at(r, c) * gv[c];
          mean_dh += dh;
          mean_dh_h += dh * xhat->at(r, c);
        }
        mean_dh /= static_cast<double>(d);
        mean_dh_h /= static_cast<double>(d);
        for (std::size_t c = 0; c < d; ++c) {
          double dh = g.at(r, c) * gv[c];
          gx.at(r, c) += (*rstd)[r] * (dh - mean_dh - xhat->at(r, c) * mean_dh_h);
        }
      }
    }
  });
}

Var max_rows(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  if (xv.rows() == 0 || xv.size() == 0) throw EmptyPool("max-pool over an empty set");
  const std::size_t d = xv.cols();
  Tensor y({d});
  std::vector<int> arg(d, 0);
  for (std::size_t c = 0; c < d; ++c) {
    double best = xv.at(0, c);
    for (std::size_t r = 1; r < xv.rows(); ++r)
      if (xv.at(r, c) > best) {
        best = xv.at(r, c);
        arg[c] = static_cast<int>(r);
      }
    y[c] = best;
  }
  Var out = t.record(std::move(y), {x.id}, [x](Tape& tp, int self) {
    if (!tp.needs_grad(x)) return;
    const Tensor& g = tp.grad(self);
    const auto& arg = tp.aux(Var{self});
    Tensor& gx = tp.grad(x.id);
    for (std::size_t c = 0; c < g.size(); ++c) gx.at(static_cast<std::size_t>(arg[c]), c) += g[c];
  });
  t.aux(out) = std::move(arg);
  return out;
}

Var neighbor_sum(Tape& t, Var h, const std::vector<std::vector<int>>& neighbors) {
  const Tensor& hv = t.value(h);
  if (neighbors.size() != hv.rows()) throw ShapeMismatch("neighbor_sum: adjacency size does not match node count");
  const std::size_t d = hv.cols();
  Tensor y({hv.rows(), d});
  for (std::size_t v = 0; v < neighbors.size(); ++v)
    for (int u : neighbors[v]) {
      if (u < 0 || static_cast<std::size_t>(u) >= hv.rows()) throw ShapeMismatch("neighbor_sum: index out of range");
      for (std::size_t c = 0; c < d; ++c) y.at(v, c) += hv.at(static_cast<std::size_t>(u), c);
    }
  return t.record(std::move(y), {h.id}, [h, neighbors](Tape& tp, int self) {
    if (!tp.needs_grad(h)) return;
    const Tensor& g = tp.grad(self);
    Tensor& gh = tp.grad(h.id);
    const std::size_t d = g.cols();
    for (std::size_t v = 0; v < neighbors.size(); ++v)
      for (int u : neighbors[v])
        for (std::size_t c = 0; c < d; ++c) gh.at(static_cast<std::size_t>(u), c) += g.at(v, c);
  });
}

Var bce_with_logits(Tape& t, Var logit, int label) {
  const Tensor& zv = t.value(logit);
  if (zv.size() != 1) throw ShapeMismatch("bce_with_logits: expected a single logit");
  if (label != 0 && label != 1) throw std::invalid_argument("bce_with_logits: label must be 0 or 1");
  const double z = zv[0];
  const double y = label;
  const double loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  return t.record(Tensor::vector({loss}), {logit.id}, [logit, y](Tape& tp, int self) {
    if (!tp.needs_grad(logit)) return;
    double z = tp.value(logit)[0];
    tp.grad(logit.id)[0] += tp.grad(self)[0] * (sigmoid_value(z) - y);
  });
}

}  // namespace espi::ad
