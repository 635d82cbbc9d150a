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

#include "espi/train.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>

#include "espi/ad/optim.hpp"
#include "espi/hash.hpp"
#include "espi/parallel.hpp"

namespace espi {

using json = nlohmann::json;

namespace {

// Unbiased draw in [0, n) from raw engine output.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % n;
}

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

}  // namespace

// ---------------------------------------------------------------------------
// splitting

SplitSizes split_sizes(std::size_t n) {
  const auto train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  const auto val = std::min(n - train, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n))));
  return {train, val, n - train - val};
}

SplitSpec split_dataset(const std::vector<std::string>& projects, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < projects.size(); ++i)
    groups[projects[i].empty() ? std::string(kUntaggedProject) : projects[i]].push_back(i);

  SplitSpec spec;
  spec.seed = seed;
  std::vector<std::size_t> pooled;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> final_groups;
  for (auto& [name, idx] : groups) {
    if (idx.size() < kMinProjectSize) {
      spec.pooled_projects.push_back(name);
      pooled.insert(pooled.end(), idx.begin(), idx.end());
    } else {
      final_groups.emplace_back(name, std::move(idx));
    }
  }
  if (!pooled.empty()) {
    std::sort(pooled.begin(), pooled.end());
    final_groups.emplace_back(std::string(kPooledProject), std::move(pooled));
  }
  for (auto& [name, idx] : final_groups) {
    std::mt19937_64 rng(fnv1a(name, seed ^ 0xcbf29ce484222325ULL));
    shuffle(idx, rng);
    const SplitSizes s = split_sizes(idx.size());
    spec.train.insert(spec.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s.train));
    spec.validation.insert(spec.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(s.train),
                           idx.begin() + static_cast<std::ptrdiff_t>(s.train + s.validation));
    spec.test.insert(spec.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(s.train + s.validation), idx.end());
  }
  return spec;
}

SplitSpec split_dataset(const std::vector<Commit>& commits, std::uint64_t seed) {
  std::vector<std::string> projects;
  projects.reserve(commits.size());
  for (const auto& c : commits) projects.push_back(c.project);
  return split_dataset(projects, seed);
}

// ---------------------------------------------------------------------------
// metrics

MetricsReport compute_metrics(const std::vector<int>& labels, const std::vector<int>& verdicts) {
  if (labels.size() != verdicts.size())
    throw LengthMismatch("labels and verdicts differ in length: " + std::to_string(labels.size()) + " vs " +
                         std::to_string(verdicts.size()));
  MetricsReport m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = verdicts[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) throw std::invalid_argument("labels and verdicts must be 0 or 1");
    if (y == 1 && p == 1) ++m.tp;
    else if (y == 0 && p == 0) ++m.tn;
    else if (y == 0 && p == 1) ++m.fp;
    else ++m.fn;
  }
  auto ratio = [](std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(m.tp + m.tn, m.total(), m.accuracy_undefined);
  m.precision = ratio(m.tp, m.tp + m.fp, m.precision_undefined);
  m.recall = ratio(m.tp, m.tp + m.fn, m.recall_undefined);
  m.f1_undefined = m.precision + m.recall == 0.0;
  m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// ---------------------------------------------------------------------------
// training

void build_vocabularies(const std::vector<const CommitFeatures*>& train, Vocab& node_types, Vocab& subtokens,
                        Vocab& message_tokens) {
  for (const CommitFeatures* f : train) {
    for (const auto& p : f->paths.paths) {
      for (const auto& t : p.node_types) node_types.add(t);
      for (const auto& s : split_subtokens(p.start_value)) subtokens.add(s);
      for (const auto& s : split_subtokens(p.end_value)) subtokens.add(s);
    }
    for (const auto& tok : f->graph.tokens) message_tokens.add(normalize_message_token(tok));
  }
}

EncodedCommit encode_commit(const Model& model, const CommitFeatures& features) {
  return {encode_paths(model, features.paths.paths), encode_graph(model, features.graph)};
}

Prediction predict_features(const Model& model, const CommitFeatures& features) {
  EncodedCommit e = encode_commit(model, features);
  return ensemble_predict(model, e.paths, e.graph);
}

MetricsReport evaluate(const Model& model, const std::vector<CommitFeatures>& features,
                       const std::vector<std::size_t>& indices) {
  std::vector<int> labels;
  for (std::size_t i : indices) {
    const auto& f = features.at(i);
    if (!f.label) throw DegenerateData("commit " + f.id + " has no label");
    labels.push_back(*f.label);
  }
  const std::vector<int> verdicts = parallel_map(
      indices.size(), [&](std::size_t j) { return predict_features(model, features[indices[j]]).verdict; });
  return compute_metrics(labels, verdicts);
}

TrainResult train(const std::vector<CommitFeatures>& features, const SplitSpec& splits, const HyperParams& hp,
                  const EpochCallback& on_epoch) {
  hp.validate();
  if (splits.train.empty()) throw DegenerateData("training split is empty");
  std::vector<const CommitFeatures*> train_set;
  int positives = 0;
  for (std::size_t i : splits.train) {
    const auto& f = features.at(i);
    if (!f.label) throw DegenerateData("training commit " + f.id + " has no label");
    positives += *f.label;
    train_set.push_back(&f);
  }
  if (positives == 0 || positives == static_cast<int>(train_set.size()))
    throw DegenerateData("training split contains a single class");

  Vocab node_types, subtokens, message_tokens;
  build_vocabularies(train_set, node_types, subtokens, message_tokens);
  TrainResult result{init_model(hp, std::move(node_types), std::move(subtokens), std::move(message_tokens), hp.seed),
                     {},
                     {}};
  Model& model = result.model;
  result.meta.seed = hp.seed;

  std::vector<EncodedCommit> encoded;
  std::vector<int> labels;
  for (const auto* f : train_set) {
    encoded.push_back(encode_commit(model, *f));
    labels.push_back(*f->label);
  }
  std::vector<EncodedCommit> val_encoded;
  std::vector<int> val_labels;
  for (std::size_t i : splits.validation) {
    const auto& f = features.at(i);
    if (!f.label) throw DegenerateData("validation commit " + f.id + " has no label");
    val_encoded.push_back(encode_commit(model, f));
    val_labels.push_back(*f.label);
  }

  ad::AdamState adam;
  adam.lr = hp.lr;
  ad::GradBuffer grads(model.params);
  std::mt19937_64 rng(hp.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(encoded.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<ad::Tensor> best;
  double best_acc = -1.0;
  int since_best = 0;
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hp.batch));
      grads.clear();
      for (std::size_t j = start; j < end; ++j) {
        const EncodedCommit& e = encoded[order[j]];
        const int y = labels[order[j]];
        ad::Tape t(model.params);
        CodeChangeEncoding code = encode_code_change(t, model, e.paths);
        ad::Var v_m = encode_message(t, model, e.graph);
        ad::Var logit = ensemble_logit(t, model, v_m, code.v_c);
        ad::Var loss = ad::bce_with_logits(t, logit, y);
        loss_sum += t.value(loss)[0];
        if (verdict_for(ad::sigmoid_value(t.value(logit)[0])) == y) ++correct;
        t.backward(loss, grads);
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      ad::adam_step(model.params, grads, adam);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (val_encoded.empty()) {
      log.validation_accuracy = log.train_accuracy;
    } else {
      std::size_t ok = 0;
      for (std::size_t i = 0; i < val_encoded.size(); ++i)
        if (ensemble_predict(model, val_encoded[i].paths, val_encoded[i].graph).verdict == val_labels[i]) ++ok;
      log.validation_accuracy = static_cast<double>(ok) / static_cast<double>(val_encoded.size());
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.validation_accuracy > best_acc) {
      best_acc = log.validation_accuracy;
      result.meta.best_epoch = epoch;
      result.meta.best_validation_accuracy = best_acc;
      best.clear();
      for (const auto& p : model.params) best.push_back(p.value);
      since_best = 0;
    } else if (++since_best >= hp.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < best.size(); ++i) model.params[static_cast<ad::ParamId>(i)].value = std::move(best[i]);
  return result;
}

// ---------------------------------------------------------------------------
// prediction

PredictionReport predict_commit(const Commit& commit, const Model& model) {
  PredictionReport report;
  report.id = commit.id;
  try {
    ExtractionConfig config{model.hp.k, model.hp.r, model.hp.max_path_len};
    CommitFeatures f = extract_features(commit, config);
    report.timings = f.timings;
    report.notes = f.notes;
    auto t0 = std::chrono::steady_clock::now();
    report.prediction = predict_features(model, f);
    report.timings.inference_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& ev : report.prediction.evidence)
      report.evidence.push_back(path_record(commit.id, f.paths.paths.at(static_cast<std::size_t>(ev.path_index))));
  } catch (const std::exception& e) {
    report.failure = e.what();
  }
  return report;
}

std::string prediction_record(const PredictionReport& r) {
  json j;
  j["id"] = r.id;
  if (r.failure) {
    j["failure"] = *r.failure;
    return j.dump();
  }
  j["prob"] = r.prediction.prob;
  j["verdict"] = r.prediction.verdict;
  j["degraded"] = r.prediction.degraded;
  j["timings_ms"] = {{"extraction", r.timings.extraction_ms},
                     {"processing", r.timings.processing_ms},
                     {"inference", r.timings.inference_ms},
                     {"total", r.timings.total_ms()}};
  json ev = json::array();
  for (const auto& e : r.evidence) ev.push_back(json::parse(e));
  j["evidence"] = std::move(ev);
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j.dump();
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

constexpr char kMagic[4] = {'E', 'S', 'P', 'I'};

class Writer {
 public:
  void u32(std::uint32_t v) { raw(v, 4); }
  void u64(std::uint64_t v) { raw(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  std::string& bytes() { return out_; }

 private:
  void raw(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::uint64_t u64() { return raw(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw BadMagic("checkpoint payload is truncated");
  }
  std::uint64_t raw(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Model& model, const TrainingMeta& meta) {
  Writer p;
  const HyperParams& hp = model.hp;
  p.i32(hp.d_model);
  p.i32(hp.hidden);
  p.i32(hp.k);
  p.f64(hp.r);
  p.i32(hp.hops);
  p.i32(hp.max_path_len);
  p.f64(hp.lr);
  p.i32(hp.patience);
  p.i32(hp.batch);
  p.i32(hp.max_epochs);
  p.u64(hp.seed);
  for (const Vocab* v : {&model.node_types, &model.subtokens, &model.message_tokens}) {
    p.u32(static_cast<std::uint32_t>(v->size()));
    for (const auto& t : v->tokens()) p.str(t);
  }
  p.u32(static_cast<std::uint32_t>(model.params.size()));
  for (const auto& param : model.params) {
    p.str(param.name);
    p.u32(static_cast<std::uint32_t>(param.value.rank()));
    for (std::size_t d : param.value.shape()) p.u64(d);
    for (double x : param.value.values()) p.f64(x);
  }
  p.i32(meta.best_epoch);
  p.f64(meta.best_validation_accuracy);
  p.u64(meta.seed);

  Writer out;
  out.bytes().append(kMagic, 4);
  out.u32(kCheckpointVersion);
  out.u64(p.bytes().size());
  out.bytes().append(p.bytes());
  out.u64(fnv1a(p.bytes()));
  return std::move(out.bytes());
}

Model deserialize_checkpoint(std::string_view bytes, TrainingMeta* meta) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw BadMagic("not an ESPI checkpoint");
  Reader header(bytes.substr(4));
  std::uint32_t version;
  try {
    version = header.u32();
  } catch (const BadMagic&) {
    throw VersionMismatch("checkpoint version field is truncated");
  }
  if (version != kCheckpointVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  const std::uint64_t length = header.u64();
  if (bytes.size() != 4 + 4 + 8 + length + 8) throw BadMagic("checkpoint is truncated or has trailing bytes");
  const std::string_view payload = bytes.substr(16, length);
  Reader tail(bytes.substr(16 + length));
  if (tail.u64() != fnv1a(payload)) throw BadMagic("checkpoint checksum mismatch");

  Reader p(payload);
  HyperParams hp;
  hp.d_model = p.i32();
  hp.hidden = p.i32();
  hp.k = p.i32();
  hp.r = p.f64();
  hp.hops = p.i32();
  hp.max_path_len = p.i32();
  hp.lr = p.f64();
  hp.patience = p.i32();
  hp.batch = p.i32();
  hp.max_epochs = p.i32();
  hp.seed = p.u64();
  try {
    hp.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointShapeMismatch(e.what());
  }
  Model m;
  m.hp = hp;
  for (Vocab* v : {&m.node_types, &m.subtokens, &m.message_tokens}) {
    std::vector<std::string> tokens(p.u32());
    for (auto& t : tokens) t = p.str();
    try {
      *v = Vocab::from_tokens(std::move(tokens));
    } catch (const std::invalid_argument& e) {
      throw CheckpointShapeMismatch(e.what());
    }
  }
  const auto layout = parameter_layout(hp, m.node_types.size(), m.subtokens.size(), m.message_tokens.size());
  const std::uint32_t count = p.u32();
  if (count != layout.size())
    throw CheckpointShapeMismatch("checkpoint has " + std::to_string(count) + " tensors, expected " +
                                  std::to_string(layout.size()));
  for (const auto& [name, shape] : layout) {
    const std::string stored = p.str();
    if (stored != name) throw CheckpointShapeMismatch("expected tensor " + name + ", found " + stored);
    std::vector<std::size_t> dims(p.u32());
    for (auto& d : dims) d = p.u64();
    if (dims != shape)
      throw CheckpointShapeMismatch("tensor " + name + " has shape " + ad::shape_string(dims) + ", expected " +
                                    ad::shape_string(shape));
    ad::Tensor t(dims);
    for (double& x : t.values()) x = p.f64();
    m.params.add(name, std::move(t));
  }
  TrainingMeta tm;
  tm.best_epoch = p.i32();
  tm.best_validation_accuracy = p.f64();
  tm.seed = p.u64();
  if (!p.done()) throw CheckpointShapeMismatch("unexpected bytes after checkpoint body");
  if (meta) *meta = tm;
  m.ids = bind_params(m.params, hp);
  return m;
}

void save_checkpoint(const Model& model, const TrainingMeta& meta, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path, TrainingMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), meta);
}

// ---------------------------------------------------------------------------
// sweeps

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "k") return SweepParam::K;
  if (name == "r") return SweepParam::R;
  if (name == "T" || name == "hops") return SweepParam::Hops;
  throw std::invalid_argument("unknown sweep parameter '" + std::string(name) + "' (expected k, r or T)");
}

std::string_view sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::K: return "k";
    case SweepParam::R: return "r";
    case SweepParam::Hops: return "T";
  }
  return "?";
}

std::vector<SweepRow> sweep(const std::vector<Commit>& commits, SweepParam param, const std::vector<double>& values,
                            const HyperParams& base, const std::vector<std::uint64_t>& seeds,
                            const std::optional<SplitSpec>& splits) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  const SplitSpec spec = splits ? *splits : split_dataset(commits, base.seed);
  const std::vector<std::size_t>& held_out = spec.test.empty() ? spec.validation : spec.test;

  std::map<std::uint64_t, std::vector<CommitFeatures>> by_config;
  std::vector<SweepRow> rows;
  for (double value : values) {
    HyperParams hp = base;
    switch (param) {
      case SweepParam::K: hp.k = static_cast<int>(std::llround(value)); break;
      case SweepParam::R: hp.r = value; break;
      case SweepParam::Hops: hp.hops = static_cast<int>(std::llround(value)); break;
    }
    for (std::uint64_t seed : seeds) {
      SweepRow row;
      row.value = value;
      row.seed = seed;
      try {
        hp.seed = seed;
        hp.validate();
        const ExtractionConfig config{hp.k, hp.r, hp.max_path_len};
        auto it = by_config.find(config.hash());
        if (it == by_config.end()) {
          auto fs = parallel_map(commits.size(), [&](std::size_t i) { return extract_features(commits[i], config); });
          it = by_config.emplace(config.hash(), std::move(fs)).first;
        }
        TrainResult r = train(it->second, spec, hp);
        row.metrics = evaluate(r.model, it->second, held_out);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string sweep_table(SweepParam param, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << sweep_param_name(param) << "\tseed\taccuracy\tf1\n";
  for (const auto& r : rows) {
    out << r.value << '\t' << r.seed << '\t';
    if (r.metrics) out << r.metrics->accuracy << '\t' << r.metrics->f1;
    else out << "error\t" << r.error;
    out << '\n';
  }
  return out.str();
}

}  // namespace espi
