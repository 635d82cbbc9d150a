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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "json.hpp"

#include "espi/dataset.hpp"
#include "espi/parallel.hpp"
#include "espi/synth.hpp"
#include "espi/train.hpp"
#include "support.hpp"

using namespace espi;

namespace {

HyperParams small_hp(std::uint64_t seed = 1) {
  HyperParams hp;
  hp.d_model = 8;
  hp.hidden = 8;
  hp.k = 40;
  hp.hops = 2;
  hp.max_epochs = 4;
  hp.patience = 2;
  hp.batch = 8;
  hp.lr = 0.01;
  hp.seed = seed;
  return hp;
}

std::vector<CommitFeatures> corpus_features(std::size_t n, std::uint64_t seed, int k = 40) {
  SynthOptions o;
  o.count = n;
  o.seed = seed;
  ExtractionConfig cfg;
  cfg.k = k;
  std::vector<CommitFeatures> out;
  for (const auto& c : generate_corpus(o)) out.push_back(extract_features(c, cfg));
  return out;
}

SplitSpec all_train(std::size_t n) {
  SplitSpec s;
  for (std::size_t i = 0; i < n; ++i) s.train.push_back(i);
  return s;
}

// Second implementation of the metric formulas, from raw counts.
struct Counts {
  double tp = 0, tn = 0, fp = 0, fn = 0;
};

Counts count(const std::vector<int>& y, const std::vector<int>& p) {
  Counts c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] && p[i]) c.tp += 1;
    if (!y[i] && !p[i]) c.tn += 1;
    if (!y[i] && p[i]) c.fp += 1;
    if (y[i] && !p[i]) c.fn += 1;
  }
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("split_dataset: sizes") {
  CHECK(split_sizes(100).train == 80);
  CHECK(split_sizes(100).validation == 10);
  CHECK(split_sizes(100).test == 10);
  CHECK(split_sizes(10).train == 8);
  CHECK(split_sizes(10).validation == 1);
  CHECK(split_sizes(10).test == 1);

  const auto s = split_dataset(std::vector<std::string>(100, "ffmpeg"), 1);
  CHECK(s.train.size() == 80);
  CHECK(s.validation.size() == 10);
  CHECK(s.test.size() == 10);
  const auto ten = split_dataset(std::vector<std::string>(10, "qemu"), 1);
  CHECK(ten.train.size() == 8);
  CHECK(ten.validation.size() == 1);
  CHECK(ten.test.size() == 1);
}

TEST_CASE("split_dataset: per-project recount, disjointness, pooling") {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    std::vector<std::string> projects;
    std::map<std::string, std::size_t> sizes;
    for (int p = 0; p < 4; ++p) {
      const std::size_t n = 10 + rng() % 90;
      sizes["p" + std::to_string(p)] = n;
      for (std::size_t i = 0; i < n; ++i) projects.push_back("p" + std::to_string(p));
    }
    std::shuffle(projects.begin(), projects.end(), rng);
    const auto s = split_dataset(projects, seed);
    std::set<std::size_t> seen;
    std::map<std::string, std::array<std::size_t, 3>> per;
    int part = 0;
    for (const auto* v : {&s.train, &s.validation, &s.test}) {
      for (std::size_t i : *v) {
        CHECK(seen.insert(i).second);
        ++per[projects[i]][static_cast<std::size_t>(part)];
      }
      ++part;
    }
    CHECK(seen.size() == projects.size());
    for (const auto& [name, n] : sizes) {
      const auto expect = split_sizes(n);
      CHECK(per[name][0] == expect.train);
      CHECK(per[name][1] == expect.validation);
      CHECK(per[name][2] == expect.test);
      CHECK(std::abs(static_cast<double>(per[name][0]) - 0.8 * static_cast<double>(n)) <= 1.0);
    }
    CHECK(s.pooled_projects.empty());
  }
  // Small projects are pooled; untagged commits form their own project.
  std::vector<std::string> projects(20, "");
  for (int i = 0; i < 3; ++i) projects.push_back("tiny");
  const auto s = split_dataset(projects, 2);
  CHECK(s.pooled_projects == std::vector<std::string>{"tiny"});
  CHECK(s.train.size() + s.validation.size() + s.test.size() == 23);
  // Seeded.
  CHECK(split_dataset(projects, 2).train == s.train);
}

TEST_CASE("compute_metrics") {
  auto m = compute_metrics({1, 1, 0, 0}, {1, 0, 0, 1});
  CHECK(m.tp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 1);
  CHECK(m.fp == 1);
  CHECK(m.accuracy == 0.5);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);
  m = compute_metrics({1, 0, 1}, {1, 0, 1});
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
  m = compute_metrics({0, 0}, {0, 0});
  CHECK(m.precision == 0.0);
  CHECK(m.precision_undefined);
  CHECK(m.f1 == 0.0);
  CHECK(m.f1_undefined);
  CHECK_THROWS_AS(compute_metrics({1}, {1, 0}), LengthMismatch);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = rng() % 50;
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 2);
      p[i] = static_cast<int>(rng() % 2);
    }
    const auto r = compute_metrics(y, p);
    const auto c = count(y, p);
    const double total = c.tp + c.tn + c.fp + c.fn;
    const double acc = total > 0 ? (c.tp + c.tn) / total : 0.0;
    const double pre = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0.0;
    const double rec = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0.0;
    const double f1 = pre + rec > 0 ? 2 * pre * rec / (pre + rec) : 0.0;
    CHECK(static_cast<double>(r.tp) == c.tp);
    CHECK(static_cast<double>(r.tn) == c.tn);
    CHECK(static_cast<double>(r.fp) == c.fp);
    CHECK(static_cast<double>(r.fn) == c.fn);
    CHECK(r.total() == n);
    CHECK(r.accuracy == acc);
    CHECK(r.precision == pre);
    CHECK(r.recall == rec);
    CHECK(r.f1 == f1);
    for (double v : {r.accuracy, r.precision, r.recall, r.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("train: degenerate data") {
  auto feats = corpus_features(12, 3);
  for (auto& f : feats) f.label = 1;
  CHECK_THROWS_AS(train(feats, all_train(feats.size()), small_hp()), DegenerateData);
  CHECK_THROWS_AS(train(feats, SplitSpec{}, small_hp()), DegenerateData);
}

TEST_CASE("train: determinism and early stopping") {
  const auto feats = corpus_features(30, 4);
  const auto splits = split_dataset(std::vector<std::string>(feats.size(), "p"), 1);
  CHECK(HyperParams{}.patience == 10);
  const auto a = train(feats, splits, small_hp());
  const auto b = train(feats, splits, small_hp());
  REQUIRE_FALSE(a.log.empty());
  CHECK(a.log[0].train_loss == b.log[0].train_loss);
  CHECK(a.meta == b.meta);

  HyperParams hp = small_hp();
  hp.max_epochs = 12;
  hp.patience = 3;
  const auto r = train(feats, splits, hp);
  double best = 0.0;
  for (const auto& e : r.log) best = std::max(best, e.validation_accuracy);
  CHECK(r.meta.best_validation_accuracy == best);
  // Ties keep the earliest epoch.
  int first = 0;
  for (const auto& e : r.log)
    if (e.validation_accuracy == best) {
      first = e.epoch;
      break;
    }
  CHECK(r.meta.best_epoch == first);
  const int last = r.log.back().epoch;
  CHECK((last == hp.max_epochs || last - r.meta.best_epoch == hp.patience));
  // The returned parameters are the best epoch's: re-evaluating gives the
  // logged validation accuracy.
  CHECK(evaluate(r.model, feats, splits.validation).accuracy == best);
}

TEST_CASE("predict_commit") {
  SynthOptions o;
  o.count = 20;
  const auto commits = generate_corpus(o);
  std::vector<CommitFeatures> feats;
  for (const auto& c : commits) feats.push_back(extract_features(c, {}));
  const auto model = train(feats, all_train(feats.size()), small_hp()).model;

  Commit msg_only;
  msg_only.id = "m1";
  msg_only.message = "Fix a possible out of bounds read";
  const auto r = predict_commit(msg_only, model);
  CHECK_FALSE(r.failure);
  CHECK(r.prediction.degraded);
  CHECK(r.prediction.prob > 0.0);
  CHECK(r.prediction.prob < 1.0);

  auto fixture = load_dataset(espi::testing::data_path("shorten_commit.jsonl"));
  const auto f = predict_commit(fixture.at(0), model);
  CHECK_FALSE(f.failure);
  CHECK_FALSE(f.prediction.degraded);
  CHECK(f.prediction.prob > 0.0);
  CHECK(f.prediction.prob < 1.0);
  CHECK(f.prediction.verdict == verdict_for(f.prediction.prob));
  CHECK_FALSE(f.evidence.empty());
  CHECK(f.timings.total_ms() > 0.0);
  const auto rec = nlohmann::json::parse(prediction_record(f));
  CHECK(rec.at("id") == "shorten-fix-bitshift");
  CHECK(rec.contains("timings_ms"));

  Commit broken = fixture[0];
  broken.files.clear();
  broken.diff = "not a diff\n";
  const auto b = predict_commit(broken, model);
  CHECK(b.failure.has_value());

  // Same checkpoint, same commit, same probability.
  CHECK(predict_commit(fixture[0], model).prediction.prob == f.prediction.prob);
}

TEST_CASE("checkpoint round-trip and corruption") {
  const auto feats = corpus_features(16, 6);
  const auto res = train(feats, all_train(feats.size()), small_hp());
  const auto dir = temp_dir("espi_ckpt_test");
  const auto path = dir / "m.ckpt";
  save_checkpoint(res.model, res.meta, path);
  TrainingMeta meta;
  const Model back = load_checkpoint(path, &meta);
  CHECK(meta == res.meta);
  CHECK(back.hp == res.model.hp);
  CHECK(back.node_types == res.model.node_types);
  CHECK(back.message_tokens == res.model.message_tokens);
  for (std::size_t i = 0; i < res.model.params.size(); ++i)
    CHECK(back.params[static_cast<int>(i)].value == res.model.params[static_cast<int>(i)].value);
  for (const auto& f : feats) CHECK(predict_features(back, f).prob == predict_features(res.model, f).prob);

  save_checkpoint(back, meta, dir / "again.ckpt");
  CHECK(espi::testing::read_file(path) == espi::testing::read_file(dir / "again.ckpt"));

  const std::string bytes = espi::testing::read_file(path);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{6}, std::size_t{12}, bytes.size() / 2,
                          bytes.size() - 1}) {
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, cut)), CheckpointError);
  }
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, 2)), BadMagic);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)), BadMagic);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x5a;
  CHECK_THROWS_AS(deserialize_checkpoint(flipped), BadMagic);
  std::string version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(deserialize_checkpoint(version), VersionMismatch);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(magic), BadMagic);

  Model wrong = res.model;
  wrong.params[wrong.ids.out_b].value = ad::Tensor({2});
  CHECK_THROWS_AS(deserialize_checkpoint(serialize_checkpoint(wrong, meta)), CheckpointShapeMismatch);
  std::filesystem::remove_all(dir);
}

TEST_CASE("feature cache") {
  SynthOptions o;
  o.count = 3;
  const auto commits = generate_corpus(o);
  const auto dir = temp_dir("espi_cache_test");
  ExtractionConfig cfg;
  cfg.k = 30;
  FeatureCache cache(dir, cfg);
  CHECK_FALSE(cache.load(commits[0].id));
  const auto first = cache.get(commits[0]);
  REQUIRE(std::filesystem::exists(cache.path_for(commits[0].id)));
  const auto hit = cache.load(commits[0].id);
  REQUIRE(hit);
  // Node ids are tree-local and not cached; everything the encoder reads is.
  REQUIRE(hit->paths.paths.size() == first.paths.paths.size());
  for (std::size_t i = 0; i < first.paths.paths.size(); ++i) {
    const auto& a = hit->paths.paths[i];
    const auto& b = first.paths.paths[i];
    CHECK(a.start_value == b.start_value);
    CHECK(a.end_value == b.end_value);
    CHECK(a.node_types == b.node_types);
    CHECK(a.category == b.category);
  }
  CHECK(hit->graph.tokens == first.graph.tokens);
  CHECK(hit->label == first.label);
  ExtractionConfig other = cfg;
  other.k = 31;
  CHECK(other.hash() != cfg.hash());
  CHECK(FeatureCache(dir, other).path_for(commits[0].id) != cache.path_for(commits[0].id));
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep: structure and determinism") {
  SynthOptions o;
  o.count = 40;
  o.seed = 9;
  const auto commits = generate_corpus(o);
  HyperParams hp = small_hp();
  hp.max_epochs = 2;
  CHECK(parse_sweep_param("k") == SweepParam::K);
  CHECK(parse_sweep_param("T") == SweepParam::Hops);
  CHECK(parse_sweep_param("r") == SweepParam::R);
  CHECK_THROWS(parse_sweep_param("lr"));
  const auto rows = sweep(commits, SweepParam::K, {100, 500}, hp, {1});
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    REQUIRE(r.metrics);
    CHECK(r.error.empty());
    CHECK(r.metrics->accuracy >= 0.0);
    CHECK(r.metrics->accuracy <= 1.0);
  }
  CHECK(rows[0].value == 100);
  CHECK(rows[1].value == 500);
  const auto again = sweep(commits, SweepParam::K, {100, 500}, hp, {1});
  CHECK(sweep_table(SweepParam::K, rows) == sweep_table(SweepParam::K, again));

  // A failing cell records its error and the sweep continues.
  const auto bad = sweep(commits, SweepParam::R, {-1.0, 1.0}, hp, {1});
  REQUIRE(bad.size() == 2);
  CHECK_FALSE(bad[0].error.empty());
  CHECK(bad[1].metrics.has_value());
}

TEST_CASE("parallel_map keeps order and reports the first failure") {
  for (unsigned workers : {1u, 4u}) {
    const auto sq = parallel_map(1000, [](std::size_t i) { return i * i; }, workers);
    REQUIRE(sq.size() == 1000);
    for (std::size_t i = 0; i < sq.size(); ++i) CHECK(sq[i] == i * i);
    try {
      parallel_map(
          200,
          [](std::size_t i) -> int {
            if (i == 37 || i == 150) throw std::runtime_error(std::to_string(i));
            return 0;
          },
          workers);
      FAIL("no exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "37");
    }
  }
  CHECK(parallel_map(0, [](std::size_t) { return 1; }).empty());
}
