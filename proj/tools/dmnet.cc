// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// dmnet: simulate, train, restore, evaluate and plot.
//
//   dmnet synth --count 4 --out src
//   dmnet simulate --clean src/clean --noise src/noise --count 4 --verify --out corpus
//   dmnet train --manifest corpus/manifest.jsonl --variant dm2 --preset tiny --out run
//   dmnet restore --checkpoint run --in corpus/degraded --out restored
//   dmnet evaluate --manifest corpus/manifest.jsonl --restored restored --out report
//   dmnet plot --in a.wav --in b.wav --out fig.png
//
// Exit codes: 0 ok, 1 internal, 2 config, 3 data, 4 numeric, 5 checkpoint,
// 6 verification failed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dmnet/checkpoint.h"
#include "dmnet/corpus.h"
#include "dmnet/error.h"
#include "dmnet/log.h"
#include "dmnet/model.h"
#include "dmnet/plot.h"
#include "dmnet/random.h"
#include "dmnet/report.h"
#include "dmnet/runtime.h"
#include "dmnet/synth.h"
#include "dmnet/trainer.h"
#include "dmnet/wav.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dmnet;

namespace {

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kConfigExit = 2,
  kDataExit = 3,
  kNumericExit = 4,
  kCheckpointExit = 5,
  kVerifyExit = 6,
};

int ExitFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kGeometry:
    case ErrorKind::kDesign:
      return kConfigExit;
    case ErrorKind::kData:
    case ErrorKind::kDimension:
    case ErrorKind::kDomain:
    case ErrorKind::kEnergy:
      return kDataExit;
    case ErrorKind::kNumeric:
      return kNumericExit;
    case ErrorKind::kCheckpoint:
      return kCheckpointExit;
  }
  return kInternal;
}

json ReadJsonFile(const std::string &path) {
  std::ifstream is(path);
  DMNET_CHECK(is.good(), kConfig, "cannot open config " + path);
  try {
    return json::parse(is);
  } catch (const json::exception &e) {
    Throw(ErrorKind::kConfig, path + ": " + e.what());
  }
}

// Snapshot of everything needed to repeat a run.
void WriteResolved(const fs::path &dir, const std::string &command, json body) {
  fs::create_directories(dir);
  body["command"] = command;
  body["deterministic"] = DeterministicMode();
  body["workdir"] = fs::current_path().string();
  std::ofstream(dir / "resolved_config.json") << body.dump(2) << '\n';
}

fs::path DirOf(const std::string &file) {
  auto p = fs::path(file).parent_path();
  return p.empty() ? fs::path(".") : p;
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
  int64_t count = 4;
  double seconds = 2.0;
  double noise_seconds = 6.0;
  uint64_t seed = 0;
  std::string out;
};

int RunSynth(const SynthArgs &a) {
  DMNET_CHECK(a.count > 0 && a.seconds > 0.0 && a.noise_seconds > 0.0, kConfig,
              "synth: count and durations must be positive");
  const fs::path out(a.out);
  fs::create_directories(out / "clean");
  fs::create_directories(out / "noise");
  // Speaker tags p226.. so validation-speaker routing can be exercised.
  for (int64_t i = 0; i < a.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "p%03lld_%03lld.wav",
                  static_cast<long long>(226 + i % 8), static_cast<long long>(i + 1));
    WriteWav((out / "clean" / name).string(),
             SynthesizeSpeechLike(a.seconds, MixSeed(a.seed, i)));
  }
  const NoiseColor colors[] = {NoiseColor::kWhite, NoiseColor::kPink,
                               NoiseColor::kBrown, NoiseColor::kBabble};
  for (int k = 0; k < 4; ++k) {
    WriteWav((out / "noise" / (NoiseColorName(colors[k]) + ".wav")).string(),
             SynthesizeNoise(a.noise_seconds, colors[k], MixSeed(a.seed, 1000 + k)));
  }
  WriteResolved(out, "synth", {{"count", a.count}, {"seconds", a.seconds},
                               {"noise_seconds", a.noise_seconds}, {"seed", a.seed}});
  std::cout << "wrote " << a.count << " clean and 4 noise files to " << a.out << "\n";
  return kOk;
}

// ------------------------------------------------------------- simulate ---

struct SimulateArgs {
  std::string config;
  std::string clean;
  std::string noise;
  std::optional<int64_t> count;
  std::optional<uint64_t> seed;
  bool verify = false;
  std::string out;
};

int RunSimulate(const SimulateArgs &a) {
  json doc = CorpusConfig{};
  if (!a.config.empty()) doc.merge_patch(ReadJsonFile(a.config));
  if (!a.clean.empty()) doc["clean_list"] = a.clean;
  if (!a.noise.empty()) doc["noise_list"] = a.noise;
  if (a.count) doc["count"] = *a.count;
  if (a.seed) doc["seed"] = *a.seed;
  if (a.verify) doc["verify"] = true;
  CorpusConfig cfg = doc.get<CorpusConfig>();
  DMNET_CHECK(!cfg.clean_list.empty() && !cfg.noise_list.empty(), kConfig,
              "simulate needs clean and noise lists (--clean/--noise or config)");
  const json resolved = cfg;
  WriteResolved(a.out, "simulate", {{"corpus", resolved}});
  auto result = BuildCorpus(cfg, a.out);
  std::cout << "manifest " << result.manifest_path << ": " << result.entries.size()
            << " utterances, " << result.skipped << " inputs skipped\n";
  if (!cfg.verify) return kOk;
  for (const auto &e : result.entries) {
    if (e.verification.passed()) continue;
    std::cout << "FAIL " << e.id << ": " << e.verification.Failures() << "\n";
  }
  if (!result.failed_ids.empty()) {
    std::cout << "verification failed for " << result.failed_ids.size() << " of "
              << result.entries.size() << " utterances\n";
    return kVerifyExit;
  }
  std::cout << "verification passed for all " << result.entries.size()
            << " utterances\n";
  return kOk;
}

// ---------------------------------------------------------------- train ---

struct TrainArgs {
  std::string config;
  std::string manifest;
  std::string preset = "tiny";
  std::string variant;
  std::optional<int64_t> steps;
  std::optional<uint64_t> seed;
  bool resume = false;
  std::string out;
};

// Preset, then config document, then flags.
std::pair<ModelConfig, TrainConfig> ResolveTrain(const TrainArgs &a) {
  Variant variant = a.variant.empty() ? Variant::kDM2 : ParseVariant(a.variant);
  json file = a.config.empty() ? json::object() : ReadJsonFile(a.config);
  DMNET_CHECK(file.is_object(), kConfig, "train config must be an object");
  for (const auto &[key, _] : file.items())
    DMNET_CHECK(key == "model" || key == "train", kConfig,
                "unknown train config section '" + key + "'");
  if (a.variant.empty() && file.contains("model") && file["model"].contains("variant"))
    variant = ParseVariant(file["model"]["variant"].get<std::string>());
  const auto preset = GetPreset(a.preset, variant);
  json model = preset.model;
  json train = preset.train;
  if (file.contains("model")) model.merge_patch(file["model"]);
  if (file.contains("train")) train.merge_patch(file["train"]);
  model["variant"] = VariantName(variant);
  if (a.steps) train["steps"] = *a.steps;
  if (a.seed) train["seed"] = *a.seed;
  auto m = model.get<ModelConfig>();
  auto t = train.get<TrainConfig>();
  m.Validate();
  t.Validate();
  return {m, t};
}

int RunTrain(const TrainArgs &a) {
  auto [model, train] = ResolveTrain(a);
  WriteResolved(a.out, "train",
                {{"preset", a.preset}, {"manifest", a.manifest},
                 {"model", model}, {"train", train}, {"resume", a.resume},
                 {"parameters", CountParameters(model)}});
  TrainOptions opts;
  if (a.resume) opts.resume = a.out;
  auto r = Train(model, train, a.manifest, a.out, opts);
  std::cout << "trained " << VariantName(model.variant) << " to step " << r.final_step
            << "; checkpoint " << r.last_checkpoint << "\n";
  return kOk;
}

// ------------------------------------------------------------- restore ---

struct RestoreArgs {
  std::string checkpoint;
  std::string in;
  std::string out;
};

int RunRestore(const RestoreArgs &a) {
  std::string path = a.checkpoint;
  if (fs::is_directory(path)) path = LatestCheckpoint(path);
  auto ckpt = LoadCheckpoint(path);
  auto model = LoadModel(ckpt);
  model->to(ComputeDtype());
  model->eval();
  std::vector<std::pair<std::string, std::string>> jobs;
  fs::path out_dir;
  if (fs::is_directory(a.in)) {
    out_dir = a.out;
    fs::create_directories(out_dir);
    std::vector<fs::path> inputs;
    for (const auto &e : fs::directory_iterator(a.in))
      if (e.is_regular_file() && e.path().extension() == ".wav") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    DMNET_CHECK(!inputs.empty(), kData, "no .wav files in " + a.in);
    for (const auto &p : inputs)
      jobs.push_back({p.string(), (out_dir / p.filename()).string()});
  } else {
    DMNET_CHECK(fs::exists(a.in), kData, "no such input " + a.in);
    out_dir = DirOf(a.out);
    fs::create_directories(out_dir);
    jobs.push_back({a.in, a.out});
  }
  WriteResolved(out_dir, "restore",
                {{"checkpoint", path}, {"step", ckpt.step}, {"variant", ckpt.variant},
                 {"model", ckpt.model_config}, {"in", a.in}, {"out", a.out}});
  for (const auto &[src, dst] : jobs) {
    auto y = Restore(model, ReadWav(src));
    for (double v : y.samples)
      DMNET_CHECK(std::isfinite(v), kNumeric, "non-finite output for " + src);
    WriteWav(dst, y);
  }
  std::cout << "restored " << jobs.size() << " file(s) with " << ckpt.variant
            << " step " << ckpt.step << "\n";
  return kOk;
}

// ------------------------------------------------------------ evaluate ---

struct EvaluateArgs {
  std::string manifest;
  std::string restored;
  std::string sidecar;
  std::string split;
  std::string out;
};

int RunEvaluate(const EvaluateArgs &a) {
  EvalOptions opts;
  opts.sidecar = a.sidecar;
  opts.split = a.split;
  auto report = Evaluate(a.manifest, a.restored, opts);
  WriteReport(report, a.out);
  WriteResolved(a.out, "evaluate", {{"evaluate", report.config}});
  std::cout << SummaryText(report);
  return kOk;
}

// ---------------------------------------------------------------- plot ---

struct PlotArgs {
  std::vector<std::string> in;
  double range_db = 80.0;
  std::string out;
};

int RunPlot(const PlotArgs &a) {
  DMNET_CHECK(!a.in.empty(), kConfig, "plot needs at least one --in");
  std::vector<Waveform> panels;
  for (const auto &p : a.in) panels.push_back(ReadWav(p));
  PlotOptions opts;
  opts.range_db = a.range_db;
  auto img = RenderSpectrograms(panels, opts);
  fs::create_directories(DirOf(a.out));
  WritePng(a.out, img);
  WriteResolved(DirOf(a.out), "plot", {{"in", a.in}, {"range_db", a.range_db},
                                       {"out", a.out}});
  std::cout << "wrote " << a.out << " (" << img.width << "x" << img.height << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"dmnet: dual-path magnitude speech restoration"};
  app.require_subcommand(1);
  std::string workdir;
  app.add_option("--workdir", workdir, "base directory for relative paths");

  SynthArgs synth;
  auto *c_synth = app.add_subcommand("synth", "write synthetic clean and noise sets");
  c_synth->add_option("--count", synth.count, "clean utterances");
  c_synth->add_option("--seconds", synth.seconds, "clean duration");
  c_synth->add_option("--noise-seconds", synth.noise_seconds, "noise duration");
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--out", synth.out)->required();

  SimulateArgs sim;
  auto *c_sim = app.add_subcommand("simulate", "build a degraded corpus");
  c_sim->add_option("--config", sim.config, "corpus config (JSON)");
  c_sim->add_option("--clean", sim.clean, "clean directory or list");
  c_sim->add_option("--noise", sim.noise, "noise directory or list");
  c_sim->add_option("--count", sim.count);
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_flag("--verify", sim.verify, "check every mixture against its spec");
  c_sim->add_option("--out", sim.out)->required();

  TrainArgs tr;
  auto *c_train = app.add_subcommand("train", "train a restoration model");
  c_train->add_option("--config", tr.config, "{\"model\": {...}, \"train\": {...}}");
  c_train->add_option("--manifest", tr.manifest)->required();
  c_train->add_option("--preset", tr.preset)->check(CLI::IsMember(kPresetNames));
  c_train->add_option("--variant", tr.variant, "s1, s2, u1, dm1 or dm2");
  c_train->add_option("--steps", tr.steps);
  c_train->add_option("--seed", tr.seed);
  c_train->add_flag("--resume", tr.resume, "continue from the latest checkpoint in --out");
  c_train->add_option("--out", tr.out)->required();

  RestoreArgs rs;
  auto *c_restore = app.add_subcommand("restore", "restore a file or a directory");
  c_restore->add_option("--checkpoint", rs.checkpoint, "checkpoint file or run directory")
      ->required();
  c_restore->add_option("--in", rs.in)->required();
  c_restore->add_option("--out", rs.out)->required();

  EvaluateArgs ev;
  auto *c_eval = app.add_subcommand("evaluate", "score restored audio");
  c_eval->add_option("--manifest", ev.manifest)->required();
  c_eval->add_option("--restored", ev.restored)->required();
  c_eval->add_option("--sidecar", ev.sidecar, "external scores (JSONL)");
  c_eval->add_option("--split", ev.split)->check(CLI::IsMember({"", "train", "valid"}));
  c_eval->add_option("--out", ev.out)->required();

  PlotArgs pl;
  auto *c_plot = app.add_subcommand("plot", "spectrogram figure (PNG)");
  c_plot->add_option("--in", pl.in, "one or more waveforms")->required();
  c_plot->add_option("--range-db", pl.range_db);
  c_plot->add_option("--out", pl.out)->required();

  std::string count_variant = "dm2", count_preset = "full";
  auto *c_count = app.add_subcommand("count-parameters", "print a model's size");
  c_count->add_option("--variant", count_variant);
  c_count->add_option("--preset", count_preset)->check(CLI::IsMember(kPresetNames));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigExit;
  }

  try {
    if (!workdir.empty()) {
      fs::create_directories(workdir);
      fs::current_path(workdir);
    }
    ApplyRuntimeSettings();
    if (*c_synth) return RunSynth(synth);
    if (*c_sim) return RunSimulate(sim);
    if (*c_train) return RunTrain(tr);
    if (*c_restore) return RunRestore(rs);
    if (*c_eval) return RunEvaluate(ev);
    if (*c_plot) return RunPlot(pl);
    if (*c_count) {
      std::cout << CountParameters(GetPreset(count_preset, ParseVariant(count_variant)).model)
                << "\n";
      return kOk;
    }
  } catch (const Error &e) {
    LOG_ERROR << e.what();
    return ExitFor(e.kind());
  } catch (const std::exception &e) {
    LOG_ERROR << e.what();
    return kInternal;
  }
  return kInternal;
}
