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

// espi: command line front end.
//
// Exit codes: 0 success, 1 data error (bad records, diffs, splits, I/O),
// 2 model error (checkpoints, failed gradient checks).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "espi/ad/optim.hpp"
#include "espi/dataset.hpp"
#include "espi/diff.hpp"
#include "espi/features.hpp"
#include "espi/parallel.hpp"
#include "espi/synth.hpp"
#include "espi/train.hpp"
#include "json.hpp"

using namespace espi;
using nlohmann::json;

namespace {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_extraction_options(CLI::App* app, HyperParams& hp) {
  app->add_option("--k", hp.k, "paths sampled per commit")->capture_default_str();
  app->add_option("--ratio", hp.r, "within-changes : within-context ratio")->capture_default_str();
  app->add_option("--max-path-len", hp.max_path_len, "longest AST path kept")->capture_default_str();
}

void add_model_options(CLI::App* app, HyperParams& hp) {
  add_extraction_options(app, hp);
  app->add_option("--dim", hp.d_model, "path embedding size")->capture_default_str();
  app->add_option("--hidden", hp.hidden, "message node size")->capture_default_str();
  app->add_option("--hops", hp.hops, "GGNN propagation steps")->capture_default_str();
  app->add_option("--lr", hp.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--batch", hp.batch, "commits per batch")->capture_default_str();
  app->add_option("--patience", hp.patience, "epochs without improvement before stopping")->capture_default_str();
  app->add_option("--max-epochs", hp.max_epochs)->capture_default_str();
  app->add_option("--seed", hp.seed)->capture_default_str();
}

ExtractionConfig extraction(const HyperParams& hp) { return {hp.k, hp.r, hp.max_path_len}; }

std::vector<CommitFeatures> featurize(const std::vector<Commit>& commits, const ExtractionConfig& config,
                                      const std::string& cache_dir) {
  if (cache_dir.empty())
    return parallel_map(commits.size(), [&](std::size_t i) { return extract_features(commits[i], config); });
  FeatureCache cache(cache_dir, config);
  return parallel_map(commits.size(), [&](std::size_t i) { return cache.get(commits[i]); });
}

json metrics_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},             {"tn", m.tn},               {"fp", m.fp},         {"fn", m.fn}};
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

Model load_model(const std::string& path) {
  try {
    return load_checkpoint(path);
  } catch (const std::exception& e) {
    throw ModelError(e.what());
  }
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw DataError("cannot write " + path);
  return file;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, double>) out.push_back(std::stod(item));
    else out.push_back(static_cast<T>(std::stoull(item)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Security patch identification from commit code and message"};
  app.require_subcommand(1);

  HyperParams hp;
  std::string data, cache_dir, out_path, ckpt;

  auto* extract = app.add_subcommand("extract", "extract and cache path and message features");
  extract->add_option("--input,--data", data, "commit dataset (JSONL)")->required();
  extract->add_option("--out,--cache", cache_dir, "feature cache directory")->required();
  add_extraction_options(extract, hp);

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("--data", data)->required();
  train_cmd->add_option("--out", out_path, "checkpoint path")->required();
  train_cmd->add_option("--cache", cache_dir, "feature cache directory");
  add_model_options(train_cmd, hp);

  auto* predict = app.add_subcommand("predict", "score commits, one JSON report per line");
  predict->add_option("--ckpt", ckpt)->required();
  predict->add_option("--input,--data", data, "commits; labels optional")->required();
  predict->add_option("--out", out_path, "report file (default stdout)");

  auto* eval = app.add_subcommand("evaluate", "metrics of a checkpoint on a labeled dataset");
  eval->add_option("--ckpt", ckpt)->required();
  eval->add_option("--data", data)->required();
  eval->add_option("--cache", cache_dir);

  std::string param = "k", values, seeds = "1,2,3";
  auto* sweep_cmd = app.add_subcommand("sweep", "train and test one model per value and seed");
  sweep_cmd->add_option("--data", data)->required();
  sweep_cmd->add_option("--param", param, "k, r or T (hops)")->capture_default_str();
  sweep_cmd->add_option("--values", values, "comma separated")->required();
  sweep_cmd->add_option("--seeds", seeds)->capture_default_str();
  sweep_cmd->add_option("--out", out_path, "table file (default stdout)");
  add_model_options(sweep_cmd, hp);

  std::size_t index = 0;
  int gc_dim = 4, gc_hidden = 3, gc_hops = 2, gc_k = 20;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full model on one commit");
  gradcheck->add_option("--data", data, "dataset (default: a synthetic commit)");
  gradcheck->add_option("--index", index, "commit in the dataset")->capture_default_str();
  gradcheck->add_option("--dim", gc_dim)->capture_default_str();
  gradcheck->add_option("--hidden", gc_hidden)->capture_default_str();
  gradcheck->add_option("--hops", gc_hops)->capture_default_str();
  gradcheck->add_option("--k", gc_k, "paths sampled from the commit")->capture_default_str();

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "write a labeled synthetic corpus");
  synth->add_option("--out", out_path)->required();
  synth->add_option("--count", so.count)->capture_default_str();
  synth->add_option("--seed", so.seed)->capture_default_str();
  synth->add_option("--positive-fraction", so.positive_fraction)->capture_default_str();
  synth->add_option("--projects", so.projects)->capture_default_str();
  synth->add_option("--label-noise", so.label_noise)->capture_default_str();
  synth->add_option("--prefix", so.id_prefix)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) {
      hp.validate();
      const auto commits = load_dataset(data, LabelPolicy::Optional);
      const auto fs = featurize(commits, extraction(hp), cache_dir);
      std::size_t noted = 0, paths = 0;
      for (const auto& f : fs) {
        noted += !f.notes.empty();
        paths += f.paths.paths.size();
        for (const auto& n : f.notes) std::cerr << f.id << ": " << n << '\n';
      }
      std::cout << "extracted " << fs.size() << " commits, " << paths << " paths, " << noted
                << " with notes, cache " << cache_dir << '\n';
    } else if (*train_cmd) {
      hp.validate();
      const auto commits = load_dataset(data);
      const auto fs = featurize(commits, extraction(hp), cache_dir);
      const SplitSpec split = split_dataset(commits, hp.seed);
      std::cerr << "split " << split.train.size() << '/' << split.validation.size() << '/' << split.test.size()
                << '\n';
      TrainResult r = train(fs, split, hp, [](const EpochLog& e) {
        std::fprintf(stderr, "epoch %3d  loss %.5f  train %.4f  valid %.4f\n", e.epoch, e.train_loss,
                     e.train_accuracy, e.validation_accuracy);
      });
      save_checkpoint(r.model, r.meta, out_path);
      json summary = {{"best_epoch", r.meta.best_epoch},
                      {"best_validation_accuracy", r.meta.best_validation_accuracy},
                      {"checkpoint", out_path}};
      if (!split.test.empty()) summary["test"] = metrics_json(evaluate(r.model, fs, split.test));
      std::cout << summary.dump(2) << '\n';
    } else if (*predict) {
      const Model model = load_model(ckpt);
      const auto commits = load_dataset(data, LabelPolicy::Optional);
      std::ofstream file;
      std::ostream& out = output(out_path, file);
      for (const auto& c : commits) out << prediction_record(predict_commit(c, model)) << '\n';
    } else if (*eval) {
      const Model model = load_model(ckpt);
      const auto commits = load_dataset(data);
      const auto fs = featurize(commits, extraction(model.hp), cache_dir);
      std::cout << metrics_json(evaluate(model, fs, all_indices(fs.size()))).dump(2) << '\n';
    } else if (*sweep_cmd) {
      const SweepParam p = parse_sweep_param(param);
      const auto commits = load_dataset(data);
      const auto rows = sweep(commits, p, parse_list<double>(values), hp, parse_list<std::uint64_t>(seeds));
      std::ofstream file;
      output(out_path, file) << sweep_table(p, rows);
    } else if (*gradcheck) {
      Commit commit;
      if (data.empty()) {
        SynthOptions one;
        one.count = 2;
        commit = generate_corpus(one).at(0);
      } else {
        commit = load_dataset(data, LabelPolicy::Optional).at(index);
      }
      HyperParams small;
      small.d_model = gc_dim;
      small.hidden = gc_hidden;
      small.hops = gc_hops;
      small.k = gc_k;
      small.validate();
      const CommitFeatures f = extract_features(commit, extraction(small));
      Vocab types, subs, msgs;
      build_vocabularies({&f}, types, subs, msgs);
      Model model = init_model(small, types, subs, msgs, 7);
      const EncodedCommit enc = encode_commit(model, f);
      const int label = commit.label.value_or(1);
      std::cout << commit.id << ": " << f.paths.paths.size() << " paths, " << f.graph.tokens.size()
                << " message nodes\n";
      const auto rep = ad::grad_check(
          [&](ad::Tape& t) { return commit_loss(t, model, enc.paths, enc.graph, label); }, model.params);
      for (const auto& pe : rep.params)
        std::printf("%-24s %8zu  %.3e\n", pe.name.c_str(), pe.checked, pe.max_rel_error);
      std::printf("max relative error %.3e (tolerance %.0e): %s\n", rep.max_error(), rep.tolerance,
                  rep.passed() ? "ok" : "FAILED");
      if (!rep.passed()) return 2;
    } else if (*synth) {
      save_dataset(generate_corpus(so), out_path);
      std::cout << "wrote " << so.count << " commits to " << out_path << '\n';
    }
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 2;
  } catch (const ad::NonFinite& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
