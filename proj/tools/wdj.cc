// Copyright 2026 The wdjudge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// wdj: generate, featurize, train, gridsearch, evaluate, predict, gradcheck
// and replay. Every command that writes artifacts also writes
// <primary output>.manifest.json with the resolved run and artifact hashes.

#include <openssl/evp.h>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wdj/corpus.h"
#include "wdj/error.h"
#include "wdj/gbdt.h"
#include "wdj/gradcheck.h"
#include "wdj/metrics.h"
#include "wdj/model.h"
#include "wdj/training.h"
#include "wdj/wide_features.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace wdj {
namespace {

// 0 success, 1 internal, 2 usage, 3 replay mismatch, 4 gradcheck failure,
// 10 + ErrorKind for library errors.
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitReplayMismatch = 3;
constexpr int kExitGradcheck = 4;

int ExitCode(ErrorKind kind) { return 10 + static_cast<int>(kind); }

void PrintError(std::string_view kind, int code, const std::string &message) {
  json j = {{"error", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << j.dump(-1, ' ', false, json::error_handler_t::replace) << std::endl;
}

struct RunConfig {
  std::string command;
  std::string dir = "wdj_out";
  std::string input, val, test, output;
  std::vector<std::string> checkpoints;
  std::string model = "wd";
  std::string preset = "default";
  uint64_t seed = 1;
  std::string config_path;
  json overrides = json::object();
  bool deterministic = false;
};

json RunToJson(const RunConfig &rc) {
  return {{"command", rc.command}, {"dir", rc.dir},          {"input", rc.input},
          {"val", rc.val},         {"test", rc.test},        {"output", rc.output},
          {"checkpoints", rc.checkpoints},                   {"model", rc.model},
          {"preset", rc.preset},   {"seed", rc.seed},        {"deterministic", rc.deterministic}};
}

RunConfig RunFromJson(const json &j) {
  RunConfig rc;
  try {
    rc.command = j.at("command").get<std::string>();
    rc.dir = j.at("dir").get<std::string>();
    rc.input = j.at("input").get<std::string>();
    rc.val = j.at("val").get<std::string>();
    rc.test = j.at("test").get<std::string>();
    rc.output = j.at("output").get<std::string>();
    rc.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
    rc.model = j.at("model").get<std::string>();
    rc.preset = j.at("preset").get<std::string>();
    rc.seed = j.at("seed").get<uint64_t>();
    rc.deterministic = j.at("deterministic").get<bool>();
  } catch (const json::exception &e) {
    Fail(ErrorKind::kParse, std::string("manifest: bad run record: ") + e.what());
  }
  return rc;
}

// Everything a command may consume, after --config overrides and --seed.
struct Resolved {
  SynthConfig synth;
  SplitRatios split;
  WideDeepConfig model;
  TrainConfig train;
  GbdtConfig gbdt;
};

json ResolvedToJson(const Resolved &r) {
  return {{"synth", SynthConfigToJson(r.synth)},
          {"split", {{"train", r.split.train}, {"val", r.split.val}, {"test", r.split.test}}},
          {"model", ModelConfigToJson(r.model)},
          {"train", TrainConfigToJson(r.train)},
          {"gbdt", GbdtConfigToJson(r.gbdt)}};
}

Resolved Resolve(const RunConfig &rc) {
  const json &o = rc.overrides;
  if (!o.is_object()) Fail(ErrorKind::kConfig, "config file must hold a JSON object");
  for (const auto &[key, _] : o.items()) {
    if (key != "synth" && key != "split" && key != "model" && key != "train" && key != "gbdt") {
      Fail(ErrorKind::kConfig, "config: unknown section \"" + key + "\"");
    }
  }
  Resolved r;
  r.synth = SynthPreset(rc.preset);
  if (o.contains("synth")) r.synth = SynthConfigFromJson(o.at("synth"), r.synth);
  if (o.contains("split")) {
    const json &s = o.at("split");
    try {
      r.split.train = s.value("train", r.split.train);
      r.split.val = s.value("val", r.split.val);
      r.split.test = s.value("test", r.split.test);
    } catch (const json::exception &e) {
      Fail(ErrorKind::kConfig, std::string("config: split: ") + e.what());
    }
  }
  if (o.contains("model")) r.model = ModelConfigFromJson(o.at("model"), r.model);
  if (o.contains("train")) r.train = TrainConfigFromJson(o.at("train"), r.train);
  if (o.contains("gbdt")) r.gbdt = GbdtConfigFromJson(o.at("gbdt"), r.gbdt);
  r.train.seed = rc.seed;
  r.train.deterministic = rc.deterministic;
  r.gbdt.seed = rc.seed;
  if (rc.model != "gbdt") r.model.mode = ParseModelMode(rc.model);
  return r;
}

// ---------------------------------------------------------------------------
// Files and hashes.

std::string ReadFile(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path &path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    Fail(ErrorKind::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string HashFile(const fs::path &path) { return Sha256Hex(ReadFile(path)); }

void RequireFile(const std::string &path, const char *what) {
  if (path.empty()) Fail(ErrorKind::kIo, std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path)) {
    Fail(ErrorKind::kIo, std::string(what) + " not found: " + path);
  }
}

bool IsNeuralCheckpoint(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::string_view(magic, 4) == "WDJM";
}

std::string DisplayName(std::string_view mode) {
  if (mode == "wd") return "W&D";
  if (mode == "wide") return "Wide-only";
  if (mode == "deep") return "Deep-only";
  if (mode == "gbdt") return "GBDT";
  return std::string(mode);
}

std::string CheckpointName(const std::string &mode) {
  return mode == "gbdt" ? "model_gbdt.json" : "model_" + mode + ".wdjm";
}

std::string Join(const std::string &dir, const std::string &file) {
  return (fs::path(dir) / file).string();
}

// Ignores the inferred K of `ds` in favour of the model's when compatible.
void AdoptClassCount(Dataset &ds, int model_k, const std::string &what) {
  if (ds.num_classes > model_k) {
    Fail(ErrorKind::kClassMismatch, what + " has K=" + std::to_string(ds.num_classes) +
                                        " but the checkpoint has K=" + std::to_string(model_k));
  }
  ds.num_classes = model_k;
}

std::vector<GbdtRow> GbdtRows(const Dataset &ds, const FeatureCatalog &catalog) {
  std::vector<GbdtRow> rows;
  rows.reserve(ds.size());
  for (const auto &s : ds.samples) rows.push_back(RawRow(ExtractWide(s, catalog)));
  return rows;
}

double Accuracy(std::span<const int> preds, std::span<const int> labels) {
  size_t hit = 0;
  for (size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return preds.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(preds.size());
}

std::string Fixed(double v, int places = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

void PrintEpoch(const EpochRecord &e) {
  std::cout << "epoch " << e.epoch << " train_loss " << Fixed(e.train_loss, 6) << " val_loss "
            << Fixed(e.val_loss, 6) << " val_acc " << Fixed(e.val_accuracy) << std::endl;
}

// ---------------------------------------------------------------------------
// Commands. Each returns its artifacts keyed by role.

using Artifacts = std::map<std::string, std::string>;

// Fills in default paths so that the manifest records explicit ones.
void ResolvePaths(RunConfig &rc) {
  const std::string &d = rc.dir;
  const std::string &c = rc.command;
  if (c == "generate") {
    if (rc.output.empty()) rc.output = d;
  } else if (c == "featurize") {
    if (rc.input.empty()) rc.input = Join(d, "corpus.jsonl");
    if (rc.output.empty()) rc.output = Join(d, "features.csv");
  } else if (c == "train" || c == "gridsearch") {
    if (rc.input.empty()) rc.input = Join(d, "train.jsonl");
    if (rc.val.empty()) rc.val = Join(d, "val.jsonl");
    if (rc.output.empty()) rc.output = Join(d, CheckpointName(rc.model));
  } else if (c == "evaluate") {
    if (rc.test.empty()) rc.test = Join(d, "test.jsonl");
    if (rc.checkpoints.empty()) {
      for (const char *mode : {"gbdt", "wide", "deep", "wd"}) {
        const std::string p = Join(d, CheckpointName(mode));
        if (fs::is_regular_file(p)) rc.checkpoints.push_back(p);
      }
      if (rc.checkpoints.empty()) Fail(ErrorKind::kIo, "evaluate: no checkpoints found in " + d);
    }
    if (rc.output.empty()) rc.output = Join(d, "eval_report.json");
  } else if (c == "predict") {
    if (rc.input.empty()) rc.input = Join(d, "test.jsonl");
    if (rc.checkpoints.empty()) rc.checkpoints.push_back(Join(d, CheckpointName(rc.model)));
    if (rc.output.empty()) rc.output = Join(d, "predictions_" + rc.model + ".jsonl");
  }
}

std::vector<std::string> InputPaths(const RunConfig &rc) {
  std::vector<std::string> in;
  for (const auto *p : {&rc.input, &rc.val, &rc.test}) {
    if (!p->empty()) in.push_back(*p);
  }
  for (const auto &p : rc.checkpoints) in.push_back(p);
  return in;
}

Artifacts CmdGenerate(const RunConfig &rc, const Resolved &r) {
  SynthResult syn = GenerateSynthetic(r.synth, rc.seed);
  SplitResult split = SplitDataset(syn.dataset, r.split, rc.seed);
  for (const auto &w : split.warnings) spdlog::warn("{}", w);
  Artifacts a;
  auto save = [&](const std::string &key, const Dataset &ds) {
    const std::string path = Join(rc.output, key + ".jsonl");
    std::ostringstream ss;
    WriteTranscripts(ds, ss);
    WriteFile(path, ss.str());
    a[key] = path;
  };
  save("corpus", syn.dataset);
  save("train", split.train);
  save("val", split.val);
  save("test", split.test);
  a["bayes_report"] = Join(rc.output, "bayes_report.json");
  WriteFile(a["bayes_report"], BayesReportToJson(syn.bayes).dump(2) + "\n");
  std::cout << "generated " << syn.dataset.size() << " samples (K=" << syn.dataset.num_classes
            << "; train " << split.train.size() << ", val " << split.val.size() << ", test "
            << split.test.size() << ")\n"
            << "bayes accuracy: joint " << Fixed(syn.bayes.joint) << ", wide-only "
            << Fixed(syn.bayes.wide_only) << ", text-only " << Fixed(syn.bayes.text_only)
            << std::endl;
  return a;
}

Artifacts CmdFeaturize(const RunConfig &rc, const Resolved &r) {
  Dataset ds = LoadTranscripts(rc.input);
  std::ostringstream ss;
  WriteFeatureCsv(ds, r.model.catalog, ss);
  WriteFile(rc.output, ss.str());
  std::cout << "featurized " << ds.size() << " samples -> " << rc.output << std::endl;
  return {{"features", rc.output}};
}

json GbdtReport(const GbdtModel &m, double train_acc, double val_acc) {
  return {{"mode", "gbdt"},
          {"config", GbdtConfigToJson(m.config)},
          {"train_accuracy", train_acc},
          {"val_accuracy", val_acc}};
}

Artifacts CmdTrain(const RunConfig &rc, const Resolved &r) {
  Dataset train = LoadTranscripts(rc.input);
  Dataset val = LoadTranscripts(rc.val);
  const std::string report_path = rc.output + ".report.json";
  if (rc.model == "gbdt") {
    if (train.num_classes != val.num_classes) {
      Fail(ErrorKind::kClassMismatch,
           "train: training split has K=" + std::to_string(train.num_classes) +
               " but validation split has K=" + std::to_string(val.num_classes));
    }
    const auto &cat = r.model.catalog;
    const auto train_rows = GbdtRows(train, cat);
    const auto train_labels = train.Labels();
    GbdtModel m = FitGbdt(train_rows, train_labels, train.num_classes, r.gbdt);
    std::vector<int> tp, vp;
    for (const auto &row : train_rows) tp.push_back(m.Predict(row));
    for (const auto &row : GbdtRows(val, cat)) vp.push_back(m.Predict(row));
    const double ta = Accuracy(tp, train_labels), va = Accuracy(vp, val.Labels());
    SaveGbdt(m, rc.output);
    WriteFile(report_path, GbdtReport(m, ta, va).dump(2) + "\n");
    std::cout << "gbdt train_acc " << Fixed(ta) << " val_acc " << Fixed(va) << std::endl;
    return {{"checkpoint", rc.output}, {"report", report_path}};
  }
  TrainResult res = Train(train, val, r.model, r.train, PrintEpoch);
  if (!rc.test.empty()) {
    Dataset test = LoadTranscripts(rc.test);
    AdoptClassCount(test, res.model.config().num_classes, "test split");
    auto preds = ArgMaxRows(PredictProba(res.model, test));
    EvalReport ev = ComputeMetrics(Confusion(preds, test.Labels(), test.num_classes),
                                   DisplayName(rc.model));
    res.report.test_metrics = EvalReportToJson(ev);
    std::cout << "test_acc " << Fixed(ev.accuracy) << std::endl;
  }
  SaveModel(res.model, rc.output);
  WriteFile(report_path, TrainReportToJson(res.report, !rc.deterministic).dump(2) + "\n");
  std::cout << "best_epoch " << res.report.best_epoch << " val_acc "
            << Fixed(res.report.best_val_accuracy) << (res.report.stopped_early ? " (early stop)" : "")
            << std::endl;
  return {{"checkpoint", rc.output}, {"report", report_path}};
}

Artifacts CmdGridsearch(const RunConfig &rc, const Resolved &r) {
  Dataset train = LoadTranscripts(rc.input);
  Dataset val = LoadTranscripts(rc.val);
  const std::string grid_path = rc.output + ".grid.json";
  json out;
  if (rc.model == "gbdt") {
    if (train.num_classes != val.num_classes) {
      Fail(ErrorKind::kClassMismatch,
           "gridsearch: training split has K=" + std::to_string(train.num_classes) +
               " but validation split has K=" + std::to_string(val.num_classes));
    }
    const auto &cat = r.model.catalog;
    GbdtGridResult g = GridSearchGbdt(GbdtRows(train, cat), train.Labels(), GbdtRows(val, cat),
                                      val.Labels(), train.num_classes, r.gbdt);
    json points = json::array();
    for (const auto &p : g.points) {
      points.push_back({{"max_depth", p.max_depth},
                        {"n_estimators", p.n_estimators},
                        {"val_accuracy", p.val_accuracy}});
    }
    out = {{"mode", "gbdt"}, {"points", points}, {"best", g.best}};
    SaveGbdt(g.model, rc.output);
    const auto &b = g.points[g.best];
    std::cout << "best max_depth " << b.max_depth << " n_estimators " << b.n_estimators
              << " val_acc " << Fixed(b.val_accuracy) << std::endl;
  } else {
    GridSearchResult g = GridSearchHidden(train, val, r.model, r.train, PrintEpoch);
    json points = json::array();
    for (const auto &p : g.points) {
      json pj = {{"lstm_hidden", p.lstm_hidden}};
      if (p.report) pj["report"] = TrainReportToJson(*p.report, !rc.deterministic);
      if (!p.error.empty()) pj["error"] = p.error;
      points.push_back(pj);
      std::cout << "lstm_hidden " << p.lstm_hidden << ": "
                << (p.report ? "val_acc " + Fixed(p.report->best_val_accuracy) : p.error)
                << std::endl;
    }
    out = {{"mode", rc.model}, {"points", points}, {"best", g.best}};
    SaveModel(g.model, rc.output);
    std::cout << "best lstm_hidden " << g.points[g.best].lstm_hidden << std::endl;
  }
  WriteFile(grid_path, out.dump(2) + "\n");
  return {{"checkpoint", rc.output}, {"grid", grid_path}};
}

// Per-sample probabilities from either checkpoint kind.
struct LoadedModel {
  std::string name;
  std::optional<WideDeepModel> neural;
  std::optional<GbdtModel> gbdt;

  int num_classes() const { return neural ? neural->config().num_classes : gbdt->num_classes; }

  std::vector<std::vector<double>> Proba(const Dataset &ds, const FeatureCatalog &catalog) const {
    if (neural) return PredictProba(*neural, ds);
    std::vector<std::vector<double>> out;
    for (const auto &row : GbdtRows(ds, catalog)) out.push_back(gbdt->PredictProba(row));
    return out;
  }
};

LoadedModel LoadAny(const std::string &path) {
  LoadedModel m;
  if (IsNeuralCheckpoint(path)) {
    m.neural = LoadModel(path);
    m.name = DisplayName(ModelModeName(m.neural->config().mode));
  } else {
    m.gbdt = LoadGbdt(path);
    m.name = DisplayName("gbdt");
  }
  return m;
}

Artifacts CmdEvaluate(const RunConfig &rc, const Resolved &r) {
  const Dataset base = LoadTranscripts(rc.test);
  std::vector<EvalReport> reports;
  for (const auto &path : rc.checkpoints) {
    LoadedModel m = LoadAny(path);
    Dataset ds = base;
    AdoptClassCount(ds, m.num_classes(), "test split " + rc.test);
    auto preds = ArgMaxRows(m.Proba(ds, r.model.catalog));
    EvalReport ev = ComputeMetrics(Confusion(preds, ds.Labels(), ds.num_classes), m.name);
    ev.split_sizes["test"] = static_cast<int64_t>(ds.size());
    reports.push_back(std::move(ev));
  }
  std::cout << RenderTable(reports);
  WriteFile(rc.output, ReportsToJson(reports).dump(2) + "\n");
  return {{"reports", rc.output}};
}

Artifacts CmdPredict(const RunConfig &rc, const Resolved &r) {
  if (rc.checkpoints.size() != 1) Fail(ErrorKind::kConfig, "predict takes one checkpoint");
  LoadedModel m = LoadAny(rc.checkpoints.front());
  Dataset ds = LoadTranscripts(rc.input);
  AdoptClassCount(ds, m.num_classes(), "input " + rc.input);
  const auto probs = m.Proba(ds, r.model.catalog);
  std::string out;
  for (size_t i = 0; i < ds.size(); ++i) {
    json j = {{"sample_id", ds.samples[i].sample_id},
              {"probs", probs[i]},
              {"pred", ArgMax(probs[i])}};
    out += j.dump() + "\n";
  }
  WriteFile(rc.output, out);
  std::cout << "wrote " << ds.size() << " predictions -> " << rc.output << std::endl;
  return {{"predictions", rc.output}};
}

int CmdGradcheck(const RunConfig &rc) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto suite = RunGradientSuite(rc.seed);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = true;
  json out = json::array();
  for (const auto &e : suite) {
    char err[32];
    std::snprintf(err, sizeof(err), "%.3e", e.max_rel_error);
    std::cout << (e.passed ? "PASS " : "FAIL ") << e.name << " max_rel_error " << err << " ("
              << e.instances << " instances, " << e.coordinates << " coordinates; worst "
              << e.worst << ")" << std::endl;
    ok = ok && e.passed;
    out.push_back({{"name", e.name},
                   {"instances", e.instances},
                   {"coordinates", e.coordinates},
                   {"max_rel_error", e.max_rel_error},
                   {"worst", e.worst},
                   {"passed", e.passed}});
  }
  spdlog::info("gradient suite took {:.2f} s", secs);
  if (!rc.output.empty()) WriteFile(rc.output, out.dump(2) + "\n");
  return ok ? 0 : kExitGradcheck;
}

// ---------------------------------------------------------------------------
// Manifests and dispatch.

std::string ManifestPath(const RunConfig &rc) {
  if (rc.command == "generate") return Join(rc.output, "generate.manifest.json");
  return rc.output + ".manifest.json";
}

std::string UtcNow() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Runs an artifact-producing command and writes its manifest.
Artifacts Execute(RunConfig &rc) {
  ResolvePaths(rc);
  for (const auto &p : InputPaths(rc)) RequireFile(p, "input");
  const Resolved r = Resolve(rc);
  const fs::path out_dir =
      rc.command == "generate" ? fs::path(rc.output) : fs::path(rc.output).parent_path();
  if (!out_dir.empty()) fs::create_directories(out_dir);
  json inputs = json::object();
  for (const auto &p : InputPaths(rc)) inputs[p] = HashFile(p);

  Artifacts a;
  const std::string &c = rc.command;
  if (c == "generate") a = CmdGenerate(rc, r);
  else if (c == "featurize") a = CmdFeaturize(rc, r);
  else if (c == "train") a = CmdTrain(rc, r);
  else if (c == "gridsearch") a = CmdGridsearch(rc, r);
  else if (c == "evaluate") a = CmdEvaluate(rc, r);
  else if (c == "predict") a = CmdPredict(rc, r);
  else Fail(ErrorKind::kConfig, "unknown command " + c);

  json artifacts = json::object();
  for (const auto &[key, path] : a) {
    artifacts[key] = {{"path", path}, {"sha256", HashFile(path)}};
  }
  json manifest = {{"tool", "wdj"},          {"manifest_version", 1},
                   {"run", RunToJson(rc)},   {"config", ResolvedToJson(r)},
                   {"inputs", inputs},       {"artifacts", artifacts}};
  if (!rc.deterministic) manifest["created_utc"] = UtcNow();
  const std::string mpath = ManifestPath(rc);
  WriteFile(mpath, manifest.dump(2) + "\n");
  spdlog::info("manifest written to {}", mpath);
  return a;
}

// Re-runs a manifest with outputs redirected into `out_dir` and compares
// artifact hashes.
int Replay(const std::string &manifest_path, const std::string &out_dir) {
  RequireFile(manifest_path, "manifest");
  json m;
  try {
    m = json::parse(ReadFile(manifest_path));
  } catch (const json::exception &e) {
    Fail(ErrorKind::kParse, "manifest " + manifest_path + ": " + e.what());
  }
  if (!m.contains("run") || !m.contains("config") || !m.contains("artifacts")) {
    Fail(ErrorKind::kParse, "manifest " + manifest_path + " lacks run/config/artifacts");
  }
  RunConfig rc = RunFromJson(m.at("run"));
  rc.overrides = m.at("config");
  const json inputs = m.value("inputs", json::object());
  for (const auto &[path, hash] : inputs.items()) {
    RequireFile(path, "input");
    if (HashFile(path) != hash.get<std::string>()) {
      Fail(ErrorKind::kValidation, "input " + path + " changed since the manifest was written");
    }
  }
  rc.dir = out_dir;
  rc.output = rc.command == "generate" ? out_dir : Join(out_dir, fs::path(rc.output).filename());
  const Artifacts fresh = Execute(rc);

  bool all = true;
  for (const auto &[key, rec] : m.at("artifacts").items()) {
    const auto it = fresh.find(key);
    const bool match =
        it != fresh.end() && HashFile(it->second) == rec.at("sha256").get<std::string>();
    std::cout << (match ? "MATCH " : "DIFF  ") << key << std::endl;
    all = all && match;
  }
  return all ? 0 : kExitReplayMismatch;
}

json LoadOverrides(const std::string &path) {
  if (path.empty()) return json::object();
  RequireFile(path, "config");
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception &e) {
    Fail(ErrorKind::kParse, "config " + path + ": " + e.what());
  }
}

int Main(int argc, char **argv) {
  auto logger = spdlog::stderr_logger_mt("wdj");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::cfg::load_env_levels();

  CLI::App app{"wdj: Wide & Deep mastery classifier toolkit"};
  app.require_subcommand(1);
  RunConfig rc;
  std::string manifest;

  auto common = [&](CLI::App *sub) {
    sub->add_option("--dir", rc.dir, "working directory for default paths")
        ->capture_default_str();
    sub->add_option("--seed", rc.seed, "the single source of randomness")->capture_default_str();
    sub->add_option("--config", rc.config_path,
                    "JSON overrides with sections synth, split, model, train, gbdt");
    sub->add_flag("--deterministic", rc.deterministic,
                  "omit wall-clock fields so reruns are byte-identical");
  };
  auto model_opt = [&](CLI::App *sub) {
    sub->add_option("--model", rc.model, "wd, wide, deep or gbdt")
        ->check(CLI::IsMember({"wd", "wide", "deep", "gbdt"}))
        ->capture_default_str();
  };

  auto *gen = app.add_subcommand("generate", "write a seeded synthetic corpus and its splits");
  common(gen);
  gen->add_option("--preset", rc.preset, "default, three-class or null")->capture_default_str();
  gen->add_option("--output", rc.output, "output directory (default --dir)");

  auto *feat = app.add_subcommand("featurize", "write the 25 wide features as CSV");
  common(feat);
  feat->add_option("--input", rc.input, "transcripts JSONL");
  feat->add_option("--output", rc.output, "CSV path");

  auto *train = app.add_subcommand("train", "train one model with early stopping");
  common(train);
  model_opt(train);
  train->add_option("--input", rc.input, "training split JSONL");
  train->add_option("--val", rc.val, "validation split JSONL");
  train->add_option("--test", rc.test, "optional test split scored into the report");
  train->add_option("--output", rc.output, "checkpoint path");

  auto *grid = app.add_subcommand("gridsearch", "hidden-size grid (or GBDT depth x rounds)");
  common(grid);
  model_opt(grid);
  grid->add_option("--input", rc.input, "training split JSONL");
  grid->add_option("--val", rc.val, "validation split JSONL");
  grid->add_option("--output", rc.output, "best checkpoint path");

  auto *eval = app.add_subcommand("evaluate", "score checkpoints on the test split");
  common(eval);
  eval->add_option("--test,--input", rc.test, "test split JSONL");
  eval->add_option("--checkpoint", rc.checkpoints, "checkpoint(s); default: all in --dir");
  eval->add_option("--output", rc.output, "reports JSON path");

  auto *pred = app.add_subcommand("predict", "write per-sample class probabilities");
  common(pred);
  model_opt(pred);
  pred->add_option("--input", rc.input, "transcripts JSONL");
  pred->add_option("--checkpoint", rc.checkpoints, "checkpoint path")->expected(1);
  pred->add_option("--output", rc.output, "predictions JSONL path");

  auto *gc = app.add_subcommand("gradcheck", "finite-difference check of every adjoint");
  gc->add_option("--seed", rc.seed, "suite seed")->capture_default_str();
  gc->add_option("--output", rc.output, "optional JSON results path");

  auto *rep = app.add_subcommand("replay", "re-run a manifest and compare artifact hashes");
  rep->add_option("--manifest", manifest, "manifest JSON")->required();
  rep->add_option("--output", rc.output, "directory for the re-run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    PrintError("usage", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    rc.command = app.get_subcommands().front()->get_name();
    if (rc.command == "gradcheck") return CmdGradcheck(rc);
    if (rc.command == "replay") return Replay(manifest, rc.output);
    rc.overrides = LoadOverrides(rc.config_path);
    Execute(rc);
    return 0;
  } catch (const Error &e) {
    const int code = ExitCode(e.kind());
    PrintError(ErrorKindName(e.kind()), code, e.what());
    return code;
  } catch (const std::exception &e) {
    PrintError("internal", kExitInternal, e.what());
    return kExitInternal;
  }
}

}  // namespace
}  // namespace wdj

int main(int argc, char **argv) { return wdj::Main(argc, argv); }
