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

#include "espi/dataset.hpp"

#include <fstream>
#include <json.hpp>

#include "espi/diff.hpp"

namespace espi {
namespace {

using nlohmann::json;

std::map<std::string, std::string> read_string_map(const json& record, const char* key, std::size_t line_no) {
  std::map<std::string, std::string> out;
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return out;
  if (!it->is_object()) throw BadRecord(std::string("field '") + key + "' must be an object", line_no);
  for (const auto& [k, v] : it->items()) {
    if (!v.is_string()) throw BadRecord(std::string("field '") + key + "." + k + "' must be a string", line_no);
    out.emplace(k, v.get<std::string>());
  }
  return out;
}

std::string required_string(const json& record, const char* key, std::size_t line_no) {
  auto it = record.find(key);
  if (it == record.end()) throw BadRecord(std::string("missing field '") + key + "'", line_no);
  if (!it->is_string()) throw BadRecord(std::string("field '") + key + "' must be a string", line_no);
  return it->get<std::string>();
}

}  // namespace

void attach_sources(Commit& commit) {
  for (auto& file : commit.files) {
    if (auto it = commit.pre_sources.find(file.path); it != commit.pre_sources.end()) file.pre_source = it->second;
    if (auto it = commit.post_sources.find(file.path); it != commit.post_sources.end()) file.post_source = it->second;
  }
}

Commit parse_commit_record(std::string_view json_line, std::size_t line_no, LabelPolicy policy) {
  json record;
  try {
    record = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw BadRecord(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!record.is_object()) throw BadRecord("record is not an object", line_no);

  Commit c;
  c.id = required_string(record, "id", line_no);
  if (c.id.empty()) throw BadRecord("empty id", line_no);
  c.message = required_string(record, "message", line_no);
  c.diff = required_string(record, "diff", line_no);

  if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw BadRecord("label must be 0 or 1", line_no);
    auto v = it->get<long long>();
    if (v != 0 && v != 1) throw BadRecord("label must be 0 or 1, got " + std::to_string(v), line_no);
    c.label = static_cast<int>(v);
  } else if (policy == LabelPolicy::Required) {
    throw BadRecord("missing field 'label'", line_no);
  }

  if (auto it = record.find("project"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw BadRecord("field 'project' must be a string", line_no);
    c.project = it->get<std::string>();
  }
  if (auto it = record.find("message_conllu"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw BadRecord("field 'message_conllu' must be a string", line_no);
    c.message_conllu = it->get<std::string>();
  }
  c.pre_sources = read_string_map(record, "pre_sources", line_no);
  c.post_sources = read_string_map(record, "post_sources", line_no);
  c.pre_asts = read_string_map(record, "pre_asts", line_no);
  c.post_asts = read_string_map(record, "post_asts", line_no);

  try {
    c.files = parse_unified_diff(c.diff);
  } catch (const MalformedDiff& e) {
    throw BadRecord(std::string("malformed diff: ") + e.what(), line_no);
  }
  attach_sources(c);
  return c;
}

std::string commit_record(const Commit& commit) {
  json record;
  record["id"] = commit.id;
  if (commit.label) record["label"] = *commit.label;
  if (!commit.project.empty()) record["project"] = commit.project;
  record["message"] = commit.message;
  record["diff"] = commit.diff;
  if (!commit.pre_sources.empty()) record["pre_sources"] = commit.pre_sources;
  if (!commit.post_sources.empty()) record["post_sources"] = commit.post_sources;
  if (commit.message_conllu) record["message_conllu"] = *commit.message_conllu;
  if (!commit.pre_asts.empty()) record["pre_asts"] = commit.pre_asts;
  if (!commit.post_asts.empty()) record["post_asts"] = commit.post_asts;
  return record.dump();
}

std::vector<Commit> load_dataset(const std::filesystem::path& path, LabelPolicy policy) {
  std::ifstream in(path);
  if (!in) throw BadRecord("cannot open " + path.string(), 0);
  std::vector<Commit> commits;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    commits.push_back(parse_commit_record(line, line_no, policy));
  }
  return commits;
}

void save_dataset(const std::vector<Commit>& commits, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& c : commits) out << commit_record(c) << '\n';
}

}  // namespace espi
