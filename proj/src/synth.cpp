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

#include "espi/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "espi/diff.hpp"

namespace espi {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::size_t below(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = eng_();
    while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 eng_;
};

const std::vector<std::string> kVerbs = {"parse", "read", "decode", "load", "copy", "fill", "scan", "get", "fetch", "handle"};
const std::vector<std::string> kNouns = {"header", "frame", "block", "entry", "packet", "record", "chunk", "table", "node", "slice"};
const std::vector<std::string> kBufs = {"buf", "data", "bytes", "in", "payload", "raw"};
const std::vector<std::string> kLens = {"len", "size", "count", "nbytes", "avail", "limit"};
const std::vector<std::string> kIdx = {"idx", "pos", "offset", "slot", "index", "n"};
const std::vector<std::string> kAccs = {"sum", "acc", "total", "result", "value", "crc"};
const std::vector<std::string> kCtx = {"ctx", "s", "st", "dec", "priv", "h"};
const std::vector<std::string> kCtxTypes = {"Context", "State", "Decoder", "Parser", "Reader", "Session"};
const std::vector<std::string> kFields = {"width", "flags", "mode", "level", "channels", "depth", "version", "kind"};
const std::vector<std::string> kModules = {"demux", "codec", "proto", "store", "image", "net", "audio", "parser"};
const std::vector<std::string> kProjects = {"libmedia", "netd", "imgtool", "kvstore", "pktlib", "fsutil"};
const std::vector<std::string> kPeople = {"Alex Moreno", "Sam Okafor", "Jo Lindqvist", "Priya Nair", "Chen Wei", "Ana Costa"};

struct Names {
  std::string fn, buf, len, idx, acc, acc2, ctx, ctx_t, field, module;
};

Names draw_names(Rng& rng) {
  Names n;
  n.fn = rng.pick(kVerbs) + "_" + rng.pick(kNouns);
  n.buf = rng.pick(kBufs);
  n.len = rng.pick(kLens);
  do n.idx = rng.pick(kIdx);
  while (n.idx == n.len);
  n.acc = rng.pick(kAccs);
  do n.acc2 = rng.pick(kAccs);
  while (n.acc2 == n.acc);
  n.ctx = rng.pick(kCtx);
  n.ctx_t = rng.pick(kCtxTypes);
  n.field = rng.pick(kFields);
  n.module = rng.pick(kModules);
  return n;
}

// A function body with the line where edits happen.
struct Template {
  std::vector<std::string> lines;
  std::size_t site = 0;
  int kind = 0;
};

Template make_template(int kind, const Names& n) {
  Template t;
  t.kind = kind;
  switch (kind) {
    case 0:  // indexed read
      t.lines = {"int " + n.fn + "(const unsigned char *" + n.buf + ", int " + n.len + ", int " + n.idx + ")",
                 "{",
                 "    int " + n.acc + " = 0;",
                 "    int i;",
                 "",
                 "    for (i = 0; i < " + n.len + "; i++)",
                 "        " + n.acc + " += " + n.buf + "[i];",
                 "    return " + n.acc + " + " + n.buf + "[" + n.idx + "];",
                 "}"};
      t.site = 7;
      break;
    case 1:  // fixed-size copy
      t.lines = {"static int " + n.fn + "(struct " + n.ctx_t + " *" + n.ctx + ", const char *" + n.buf + ", size_t " +
                     n.len + ")",
                 "{",
                 "    char " + n.acc + "[64];",
                 "",
                 "    if (!" + n.buf + ")",
                 "        return -1;",
                 "    memcpy(" + n.acc + ", " + n.buf + ", " + n.len + ");",
                 "    " + n.ctx + "->" + n.field + " = " + n.acc + "[0];",
                 "    return 0;",
                 "}"};
      t.site = 6;
      break;
    case 2:  // allocation with an error path
      t.lines = {"int " + n.fn + "(struct " + n.ctx_t + " *" + n.ctx + ", size_t " + n.len + ")",
                 "{",
                 "    char *" + n.buf + ";",
                 "",
                 "    " + n.buf + " = malloc(" + n.len + ");",
                 "    if (!" + n.buf + ")",
                 "        return -1;",
                 "    if (load_" + n.field + "(" + n.ctx + ", " + n.buf + ", " + n.len + ") < 0)",
                 "        return -1;",
                 "    " + n.ctx + "->" + n.field + " = " + n.buf + ";",
                 "    return 0;",
                 "}"};
      t.site = 7;
      break;
    default:  // lookup result used directly
      t.lines = {"int " + n.fn + "(struct " + n.ctx_t + " *" + n.ctx + ", int " + n.idx + ")",
                 "{",
                 "    struct " + n.ctx_t + "Entry *" + n.acc + ";",
                 "",
                 "    " + n.acc + " = lookup_" + n.field + "(" + n.ctx + ", " + n.idx + ");",
                 "    return " + n.acc + "->" + n.field + ";",
                 "}"};
      t.site = 5;
      break;
  }
  return t;
}

void insert_at(std::vector<std::string>& lines, std::size_t at, const std::vector<std::string>& add) {
  lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), add.begin(), add.end());
}

// The fixed version of a template function.
std::vector<std::string> security_fix(const Template& t, const Names& n) {
  std::vector<std::string> out = t.lines;
  switch (t.kind) {
    case 0:
      insert_at(out, t.site, {"    if (" + n.idx + " < 0 || " + n.idx + " >= " + n.len + ")", "        return -1;"});
      break;
    case 1:
      insert_at(out, t.site, {"    if (" + n.len + " > sizeof(" + n.acc + "))", "        return -1;"});
      break;
    case 2:
      out[t.site] += " {";
      insert_at(out, t.site + 1, {"        free(" + n.buf + ");"});
      insert_at(out, t.site + 3, {"    }"});
      break;
    default:
      insert_at(out, t.site, {"    if (!" + n.acc + ")", "        return -1;"});
      break;
  }
  return out;
}

std::string replace_word(const std::string& line, const std::string& from, const std::string& to) {
  std::string out;
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  std::size_t i = 0;
  while (i < line.size()) {
    if (line.compare(i, from.size(), from) == 0 && (i == 0 || !is_word(line[i - 1])) &&
        (i + from.size() == line.size() || !is_word(line[i + from.size()]))) {
      out += to;
      i += from.size();
    } else {
      out += line[i++];
    }
  }
  return out;
}

std::vector<std::string> benign_edit(const Template& t, const Names& n, int which) {
  std::vector<std::string> out = t.lines;
  switch (which) {
    case 0:
      insert_at(out, t.site, {"    log_debug(\"" + n.fn + " called\");"});
      break;
    case 1:
      insert_at(out, t.site, {"    " + n.module + "_stats." + n.fn + "_calls++;"});
      break;
    case 2:
      for (std::size_t i = 1; i < out.size(); ++i) out[i] = replace_word(out[i], n.acc, n.acc2);
      break;
    default:
      insert_at(out, t.site, {"    trace_" + n.module + "(" + n.ctx + "_id, " + std::to_string(which * 7 + 1) + ");"});
      break;
  }
  return out;
}

std::string fill(std::string text, const Names& n) {
  auto sub = [&](const std::string& key, const std::string& val) {
    for (std::size_t p = text.find(key); p != std::string::npos; p = text.find(key, p + val.size()))
      text.replace(p, key.size(), val);
  };
  sub("{fn}", n.fn);
  sub("{buf}", n.buf);
  sub("{len}", n.len);
  sub("{idx}", n.idx);
  sub("{acc}", n.acc);
  sub("{acc2}", n.acc2);
  sub("{module}", n.module);
  sub("{field}", n.field);
  return text;
}

const std::vector<std::vector<std::string>> kSecuritySubjects = {
    {"Fix out-of-bounds read in {fn}", "{module}: validate {idx} before indexing {buf}",
     "{module}: fix heap buffer overflow in {fn}"},
    {"Fix buffer overflow in {fn}", "{module}: check {len} before copying into a fixed-size buffer",
     "{module}: fix stack overflow when {len} is too large"},
    {"Fix memory leak in {fn} error path", "{module}: free {buf} when loading {field} fails",
     "{module}: plug leak on failure in {fn}"},
    {"Fix NULL pointer dereference in {fn}", "{module}: check lookup result before use",
     "{module}: avoid crash when {field} entry is missing"},
};
const std::vector<std::string> kSecurityBodies = {
    "A crafted input can trigger an invalid memory access.",
    "This can be triggered remotely with a malicious packet.",
    "Found by fuzzing; the issue leads to a crash or memory corruption.",
    "An attacker controlled length could overflow the buffer.",
    "Without the check a corrupted file causes out of bounds access.",
};
const std::vector<std::vector<std::string>> kBenignSubjects = {
    {"Add debug logging to {fn}", "{module}: log calls to {fn}", "{module}: more verbose debug output"},
    {"{module}: count calls to {fn}", "Track {fn} usage in statistics", "{module}: add call counter"},
    {"Rename {acc} to {acc2} in {fn}", "{module}: use clearer variable name", "Refactor {fn} for readability"},
    {"{module}: add trace point to {fn}", "Add tracing hook in {fn}", "{module}: instrument {fn}"},
};
const std::vector<std::string> kBenignBodies = {
    "No functional change.",
    "Makes the code easier to follow.",
    "Needed for the upcoming statistics work.",
    "Helps when debugging configuration problems.",
    "Cosmetic cleanup.",
};

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) lines.push_back(l);
  return lines;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace

std::string unified_diff(const std::string& path, const std::string& before, const std::string& after) {
  const auto a = split(before);
  const auto b = split(after);
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix])
    ++suffix;
  if (prefix == a.size() && prefix == b.size()) throw std::invalid_argument("unified_diff: versions are identical");
  const std::size_t start = prefix >= 3 ? prefix - 3 : 0;
  const std::size_t a_end = std::min(a.size(), a.size() - suffix + 3);
  Chunk chunk;
  chunk.pre_start_line = static_cast<int>(start) + 1;
  chunk.post_start_line = static_cast<int>(start) + 1;
  for (std::size_t i = start; i < prefix; ++i) chunk.lines.push_back({LineKind::Context, a[i]});
  for (std::size_t i = prefix; i < a.size() - suffix; ++i) chunk.lines.push_back({LineKind::Subtractive, a[i]});
  for (std::size_t i = prefix; i < b.size() - suffix; ++i) chunk.lines.push_back({LineKind::Additive, b[i]});
  for (std::size_t i = a.size() - suffix; i < a_end; ++i) chunk.lines.push_back({LineKind::Context, a[i]});
  FileDiff fd;
  fd.path = path;
  fd.chunks.push_back(std::move(chunk));
  return serialize_unified_diff({fd});
}

std::vector<Commit> generate_corpus(const SynthOptions& options) {
  if (options.projects == 0) throw std::invalid_argument("generate_corpus: need at least one project");
  Rng rng(options.seed);
  std::vector<Commit> out;
  out.reserve(options.count);
  const std::size_t n_pos = static_cast<std::size_t>(std::llround(options.positive_fraction * static_cast<double>(options.count)));
  std::vector<int> labels(options.count, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(n_pos, options.count)), 1);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);

  for (std::size_t i = 0; i < options.count; ++i) {
    const int label = labels[i];
    Names n = draw_names(rng);
    const int kind = static_cast<int>(rng.below(4));
    if (kind == 2) n.acc = n.buf;  // renames target the buffer there
    Template t = make_template(kind, n);
    Names helper_names = draw_names(rng);
    helper_names.fn = n.module + "_" + helper_names.fn;
    Template helper = make_template(static_cast<int>(rng.below(4)), helper_names);

    const int benign_kind = static_cast<int>(rng.below(4));
    std::vector<std::string> edited = label ? security_fix(t, n) : benign_edit(t, n, benign_kind);

    std::vector<std::string> head = {"#include <stdlib.h>", "#include <string.h>", "#include \"" + n.module + ".h\"", ""};
    auto file = [&](const std::vector<std::string>& fn_lines) {
      std::vector<std::string> all = head;
      all.insert(all.end(), helper.lines.begin(), helper.lines.end());
      all.push_back("");
      all.insert(all.end(), fn_lines.begin(), fn_lines.end());
      return join(all);
    };
    Commit c;
    char id[64];
    std::snprintf(id, sizeof id, "%s-%06zu", options.id_prefix.c_str(), i);
    c.id = id;
    c.project = kProjects[rng.below(std::min(options.projects, kProjects.size()))];
    const std::string path = "src/" + n.module + "/" + n.module + "_" + std::to_string(rng.below(9)) + ".c";
    const std::string pre = file(t.lines);
    const std::string post = file(edited);
    c.diff = unified_diff(path, pre, post);
    c.pre_sources[path] = pre;
    c.post_sources[path] = post;

    std::string subject = fill(rng.pick(label ? kSecuritySubjects[static_cast<std::size_t>(kind)]
                                              : kBenignSubjects[static_cast<std::size_t>(benign_kind)]),
                               n);
    std::string message = subject + "\n\n" + rng.pick(label ? kSecurityBodies : kBenignBodies);
    if (label && rng.unit() < 0.3)
      message += " Assigned CVE-20" + std::to_string(15 + rng.below(9)) + "-" + std::to_string(1000 + rng.below(9000)) + ".";
    if (rng.unit() < 0.5) {
      const std::string who = rng.pick(kPeople);
      std::string handle;
      for (char ch : who)
        if (ch != ' ') handle.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      message += "\n\nSigned-off-by: " + who + " <" + handle + "@example.org>";
    }
    c.message = message;

    int final_label = label;
    if (options.label_noise > 0.0 && rng.unit() < options.label_noise) final_label = 1 - label;
    c.label = final_label;
    c.files = parse_unified_diff(c.diff);
    for (auto& f : c.files) {
      f.pre_source = pre;
      f.post_source = post;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace espi
