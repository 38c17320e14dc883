// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
//
//   dmnet_acceptance            run all criteria
//   dmnet_acceptance 3 5        run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "../grad_oracle.h"
#include "../test_helpers.h"
#include "dmnet/checkpoint.h"
#include "dmnet/corpus.h"
#include "dmnet/distortion.h"
#include "dmnet/filter.h"
#include "dmnet/metrics.h"
#include "dmnet/model.h"
#include "dmnet/random.h"
#include "dmnet/runtime.h"
#include "dmnet/stft.h"
#include "dmnet/synth.h"
#include "dmnet/trainer.h"
#include "dmnet/wav.h"

#ifndef DMNET_CLI_PATH
#error "DMNET_CLI_PATH must name the dmnet executable"
#endif

namespace fs = std::filesystem;
using namespace dmnet;
using torch::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char *name;
  double budget_s;  // wall-clock limit, part of the criterion
  std::function<Outcome()> run;
};

std::string Fmt(const char *fmt, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

fs::path Scratch(const std::string &name) {
  auto d = fs::temp_directory_path() / "dmnet_acceptance" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string ReadBytes(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

// Runs the CLI; output goes to `log`.
int Cli(const std::string &args, const fs::path &log, bool deterministic = false) {
  std::string cmd;
  if (deterministic) cmd += std::string(kDeterministicEnv) + "=1 ";
  cmd += std::string("\"") + DMNET_CLI_PATH + "\" " + args + " >> \"" +
         log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Byte-level comparison of every regular file under two trees, restricted to
// files whose name passes `keep`.
bool SameTrees(const fs::path &a, const fs::path &b,
               const std::function<bool(const fs::path &)> &keep, int *files,
               std::string *why) {
  std::set<std::string> na, nb;
  for (const auto &e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file() && keep(e.path())) na.insert(fs::relative(e.path(), a).string());
  for (const auto &e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file() && keep(e.path())) nb.insert(fs::relative(e.path(), b).string());
  if (na != nb) {
    *why = "file sets differ";
    return false;
  }
  *files = static_cast<int>(na.size());
  for (const auto &rel : na) {
    if (ReadBytes(a / rel) != ReadBytes(b / rel)) {
      *why = rel + " differs";
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

Outcome StftRoundTrip() {
  Rng rng(20260);
  struct Shape { WindowKind window; int divisor; };
  const Shape shapes[] = {{WindowKind::kHann, 2}, {WindowKind::kHann, 4},
                          {WindowKind::kHamming, 2}, {WindowKind::kRectangular, 1},
                          {WindowKind::kRectangular, 2}};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s = shapes[rng.UniformInt(0, 4)];
    StftConfig cfg;
    cfg.hop = static_cast<int>(rng.UniformInt(16, 256));
    cfg.win_length = cfg.hop * s.divisor;
    cfg.n_fft = cfg.win_length + cfg.win_length % 2 + 2 * static_cast<int>(rng.UniformInt(0, 64));
    cfg.window = s.window;
    cfg.compress_exponent = rng.Uniform(0.2, 1.0);
    Stft stft(cfg);
    const int64_t n = rng.UniformInt(kSampleRate, 3 * kSampleRate);
    auto x = torch::tensor(testing::WhiteNoise(n, 7000 + trial, 0.3), torch::kFloat64);
    auto y = stft.Synthesize(stft.Analyze(x), n);
    if (y.size(0) != n) return {false, "length changed"};
    worst = std::max(worst, (x - y).abs().max().item<double>());
  }
  return {worst < 1e-6, Fmt("100 configs, max |x - istft(stft(x))| = %.3g", worst)};
}

Outcome DistortionCalibration() {
  // SNR: 200 speech-like mixtures over the recipe range.
  Rng rng(31);
  const NoiseColor colors[] = {NoiseColor::kWhite, NoiseColor::kPink,
                               NoiseColor::kBrown, NoiseColor::kBabble};
  double snr_err = 0.0;
  for (int i = 0; i < 200; ++i) {
    auto clean = SynthesizeSpeechLike(1.0, 100 + i);
    auto noise = SynthesizeNoise(1.5, colors[i % 4], 500 + i);
    const double snr = rng.Uniform(0.0, 20.0);
    auto m = MixAtSnr(clean, noise, snr, &rng);
    snr_err = std::max(snr_err, std::abs(MeasuredSnr(clean.samples, m.mixture.samples) - snr));
  }
  // RT60: 50 sampled rooms, measured independently by Schroeder integration.
  DistortionRanges ranges;
  double rt_rel = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto spec = SampleDistortion(ranges, &rng);
    auto rir = GenerateRir(spec);
    const double rt = Rt60Schroeder(rir.taps);
    rt_rel = std::max(rt_rel, std::abs(rt - spec.rt60_s) / spec.rt60_s);
  }
  // Butterworth-8 at 3 kHz against a 6 kHz tone (steady-state second).
  LowpassDesign d;
  d.family = FilterFamily::kButterworth;
  d.order = 8;
  d.cutoff_hz = 3000.0;
  auto x = testing::Sine(2 * kSampleRate, 6000.0, 0.5);
  auto y = DesignLowpass(d).Apply(x);
  const double atten = 20.0 * std::log10(testing::Rms(x, kSampleRate, 2 * kSampleRate) /
                                         testing::Rms(y, kSampleRate, 2 * kSampleRate));
  const bool ok = snr_err < 0.1 && rt_rel <= 0.2 && atten >= 24.0;
  return {ok, Fmt("SNR max err %.4f dB; RT60 max rel err %.1f%%; 6 kHz attenuation %.1f dB",
                  snr_err, 100.0 * rt_rel, atten)};
}

Outcome ParameterCounts() {
  ModelConfig base;  // full-size configuration
  auto built = [&](Variant v) {
    ModelConfig c = base;
    c.variant = v;
    DmNet m(c);
    const int64_t n = CountParameters(*m);
    if (n != CountParameters(c)) return int64_t{-1};
    return n;
  };
  const int64_t s1 = built(Variant::kS1), u1 = built(Variant::kU1),
                dm1 = built(Variant::kDM1), dm2 = built(Variant::kDM2);
  DecoderBody body(base, 1);
  const int64_t one_body = CountParameters(*body);
  const bool ok = s1 > 0 && dm1 == s1 && dm2 == dm1 + 1 && u1 - dm1 == one_body;
  std::ostringstream os;
  os << "S1 " << s1 << ", DM1 " << dm1 << ", DM2 " << dm2 << ", U1 " << u1
     << ", one magnitude body " << one_body;
  return {ok, os.str()};
}

Outcome FusionAlgebra() {
  auto make = [](ModelConfig cfg, uint64_t seed) {
    torch::manual_seed(seed);
    DmNet m(cfg);
    m->to(torch::kFloat64);
    return m;
  };
  auto s1 = make(TinyModelConfig(Variant::kS1), 5);
  auto g = torch::make_generator<at::CPUGeneratorImpl>(6);
  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  auto mag = torch::rand({2, 9, 17}, g, opts);
  auto phase = (torch::rand({2, 9, 17}, g, opts) * 2 - 1) * M_PI;
  torch::NoGradGuard ng;
  auto ref = s1->forward(mag, phase);

  auto dm1_cfg = TinyModelConfig(Variant::kDM1);
  dm1_cfg.omega = 1.0;
  auto dm1 = make(dm1_cfg, 77);
  CopyParameters(*s1, *dm1);
  const bool dm1_ok = torch::equal(dm1->forward(mag, phase).mag_final, ref.mag_final);

  auto dm2 = make(TinyModelConfig(Variant::kDM2), 78);
  CopyParameters(*s1, *dm2);
  ForwardOptions zero_map;
  zero_map.zero_map_path = true;
  dm2->alpha().fill_(0.0);
  auto a0 = dm2->forward(mag, phase, {}, zero_map);
  // alpha = 0 and no map: the masking path is S1 and the fused sum is empty.
  const bool mask_ok = torch::equal(a0.mag_mask_path, ref.mag_final) &&
                       torch::equal(a0.phase, ref.phase);
  const bool sum_ok = a0.mag_final.abs().max().item<double>() == 0.0;
  dm2->alpha().fill_(1.0);
  const bool unit_ok =
      torch::equal(dm2->forward(mag, phase, {}, zero_map).mag_final, ref.mag_final);
  std::ostringstream os;
  os << "DM1(w=1) == S1: " << (dm1_ok ? "exact" : "differs")
     << "; DM2(a=0, map=0) mask path == S1: " << (mask_ok ? "exact" : "differs")
     << ", fused == 0: " << (sum_ok ? "yes" : "no")
     << "; DM2(a=1, map=0) fused == S1: " << (unit_ok ? "exact" : "differs");
  return {dm1_ok && mask_ok && sum_ok && unit_ok, os.str()};
}

Outcome GradientCheck() {
  std::ostringstream os;
  bool ok = true;
  for (const auto &p : testing::TinyGradientCheck()) {
    ok = ok && p.rel_error() < 1e-4 && p.analytic != 0.0;
    os << p.name << " rel " << Fmt("%.2e", p.rel_error()) << "; ";
  }
  auto s = os.str();
  return {ok, s.substr(0, s.size() - 2)};
}

Outcome OverfitSmoke() {
  auto root = Scratch("overfit");
  fs::create_directories(root / "src" / "clean");
  fs::create_directories(root / "src" / "noise");
  WriteWav((root / "src" / "clean" / "p226_001.wav").string(), SynthesizeSpeechLike(0.25, 1));
  WriteWav((root / "src" / "clean" / "p227_001.wav").string(), SynthesizeSpeechLike(0.25, 2));
  WriteWav((root / "src" / "noise" / "n.wav").string(), SynthesizeNoise(3.0, NoiseColor::kPink, 3));
  CorpusConfig cc;
  cc.clean_list = (root / "src" / "clean").string();
  cc.noise_list = (root / "src" / "noise").string();
  cc.count = 2;
  cc.seed = 5;
  auto corpus = BuildCorpus(cc, (root / "corpus").string());

  auto preset = GetPreset("tiny", Variant::kDM2);
  preset.train.steps = 2000;
  preset.train.seed = 1;
  preset.train.log_every = 500;
  auto r = Train(preset.model, preset.train, corpus.manifest_path, (root / "run").string());
  if (r.log.size() != 2000) return {false, "training stopped early"};
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 50; ++i) {
    head += r.log[i].mag / 50;
    tail += r.log[r.log.size() - 1 - i].mag / 50;
  }
  auto model = LoadModel(LoadCheckpoint(r.last_checkpoint));
  model->eval();
  double noisy = 0.0, restored = 0.0;
  for (const auto &e : corpus.entries) {
    auto clean = ReadWav(ManifestPath(corpus.manifest_path, e.clean_path));
    auto deg = ReadWav(ManifestPath(corpus.manifest_path, e.degraded_path));
    noisy += Lsd(clean, deg) / corpus.entries.size();
    restored += Lsd(clean, Restore(model, deg)) / corpus.entries.size();
  }
  const double ratio = head / tail;
  return {ratio >= 10.0 && noisy - restored >= 3.0,
          Fmt("mag loss %.4g -> %.4g (%.1fx); LSD degraded %.2f dB", head, tail, ratio, noisy) +
              Fmt(" -> restored %.2f dB", restored)};
}

Outcome MetricOracles() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int64_t n = 4000 + 731 * i;
    auto a = testing::WhiteNoise(n, 300 + i, 0.2);
    auto b = testing::WhiteNoise(n, 400 + i, 0.05 + 0.01 * i);
    for (int64_t k = 0; k < n; ++k) b[k] += 0.5 * a[k];
    worst = std::max(worst, std::abs(Lsd(Waveform(a), Waveform(b)) - testing::BruteForceLsd(a, b)));
  }
  Waveform x(testing::StoiProbe(0)), y(testing::StoiProbe(1));
  const double self = Stoi(x, x);
  const double base = Stoi(x, y);
  double scale_err = 0.0;
  for (double k : {0.01, 0.5, 3.0, 100.0}) {
    Waveform ys(y.samples), xs(x.samples);
    for (auto &v : ys.samples) v *= k;
    for (auto &v : xs.samples) v *= k;
    scale_err = std::max({scale_err, std::abs(Stoi(x, ys) - base), std::abs(Stoi(xs, y) - base)});
  }
  Waveform twice(x.samples);
  for (auto &v : twice.samples) v *= 2.0;
  const double sdr = SiSdr(x, twice);
  const bool ok = worst < 1e-9 && self >= 0.999 && scale_err <= 1e-6 &&
                  sdr == kSiSdrCapDb && SiSdr(x, x) == kSiSdrCapDb;
  return {ok, Fmt("LSD vs brute force %.2e; STOI(x,x) %.6f; STOI scale drift %.2e; "
                  "SI-SDR(x,2x) %.1f dB",
                  worst, self, scale_err, sdr)};
}

// Shared by the two CLI criteria: synthetic sources for a 4-utterance corpus.
fs::path CliSources(const fs::path &root, const fs::path &log) {
  if (Cli("--workdir \"" + root.string() + "\" synth --count 4 --seconds 1.0 --seed 3 --out src",
          log) != 0)
    return {};
  return root / "src";
}

Outcome Determinism() {
  auto root = Scratch("determinism");
  const auto log = root / "cli.log";
  if (CliSources(root, log).empty()) return {false, "synth failed; see " + log.string()};
  const std::string wd = "--workdir \"" + root.string() + "\" ";
  for (const char *tag : {"a", "b"}) {
    const std::string t(tag);
    if (Cli(wd + "simulate --clean src/clean --noise src/noise --count 4 --seed 7 --out corpus_" + t,
            log, true) != 0)
      return {false, "simulate failed; see " + log.string()};
    if (Cli(wd + "train --manifest corpus_" + t + "/manifest.jsonl --variant dm2 --steps 100 "
                 "--seed 11 --out run_" + t,
            log, true) != 0)
      return {false, "train failed; see " + log.string()};
  }
  int n_corpus = 0, n_log = 0;
  std::string why;
  auto corpus_files = [](const fs::path &p) {
    return p.extension() == ".wav" || p.filename() == "manifest.jsonl";
  };
  if (!SameTrees(root / "corpus_a", root / "corpus_b", corpus_files, &n_corpus, &why))
    return {false, "corpus: " + why};
  auto logs = [](const fs::path &p) { return p.filename() == kTrainLogName; };
  if (!SameTrees(root / "run_a", root / "run_b", logs, &n_log, &why))
    return {false, "train log: " + why};
  const bool ok = n_corpus == 9 && n_log == 1;
  return {ok, std::to_string(n_corpus) + " corpus files and " + std::to_string(n_log) +
                  " loss log identical across reruns (deterministic mode)"};
}

Outcome VariantMatrix() {
  auto root = Scratch("variants");
  const auto log = root / "cli.log";
  if (CliSources(root, log).empty()) return {false, "synth failed; see " + log.string()};
  const std::string wd = "--workdir \"" + root.string() + "\" ";
  if (Cli(wd + "simulate --clean src/clean --noise src/noise --count 4 --seed 9 --out corpus", log) != 0)
    return {false, "simulate failed; see " + log.string()};
  const auto entries = ReadManifest((root / "corpus" / "manifest.jsonl").string());
  if (entries.size() != 4) return {false, "corpus does not hold 4 utterances"};
  std::ostringstream os;
  bool ok = true;
  for (const char *v : {"s1", "s2", "u1", "dm1", "dm2"}) {
    const std::string run = std::string("run_") + v, out = std::string("restored_") + v;
    if (Cli(wd + "train --manifest corpus/manifest.jsonl --variant " + v +
                " --steps 100 --out " + run, log) != 0 ||
        Cli(wd + "restore --checkpoint " + run + " --in corpus/degraded --out " + out, log) != 0) {
      os << v << " failed; ";
      ok = false;
      continue;
    }
    bool good = true;
    for (const auto &e : entries) {
      const auto in = ReadWav((root / "corpus" / e.degraded_path).string());
      const auto path = root / out / fs::path(e.degraded_path).filename();
      if (!fs::exists(path)) {
        good = false;
        break;
      }
      const auto y = ReadWav(path.string());
      good = good && y.size() == in.size() &&
             std::all_of(y.samples.begin(), y.samples.end(),
                         [](double s) { return std::isfinite(s); });
    }
    os << v << (good ? " ok; " : " bad output; ");
    ok = ok && good;
  }
  auto s = os.str();
  return {ok, s.substr(0, s.size() - 2)};
}

}  // namespace

int main(int argc, char **argv) {
  torch::set_num_threads(1);
  const std::vector<Criterion> all = {
      {1, "stft round trip", 30, StftRoundTrip},
      {2, "distortion calibration", 120, DistortionCalibration},
      {3, "parameter counts", 60, ParameterCounts},
      {4, "fusion algebra", 60, FusionAlgebra},
      {5, "gradient check", 60, GradientCheck},
      {6, "overfit smoke", 600, OverfitSmoke},
      {7, "metric oracles", 60, MetricOracles},
      {8, "determinism", 600, Determinism},
      {9, "variant matrix", 300, VariantMatrix},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0, ran = 0;
  for (const auto &c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > c.budget_s) {
      o.pass = false;
      o.detail += Fmt(" [over budget: %.0f s > %.0f s]", dt, c.budget_s);
    }
    std::printf("[%s] %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, dt,
                o.detail.c_str());
    std::fflush(stdout);
    ++ran;
    if (!o.pass) ++failed;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
