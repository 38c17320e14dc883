// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "doctest_torch.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "dmnet/checkpoint.h"
#include "dmnet/corpus.h"
#include "dmnet/error.h"
#include "dmnet/losses.h"
#include "dmnet/model.h"
#include "dmnet/optim.h"
#include "dmnet/runtime.h"
#include "dmnet/synth.h"
#include "dmnet/trainer.h"
#include "grad_oracle.h"

using namespace dmnet;
using torch::Tensor;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string ReadBytes(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

fs::path FreshDir(const std::string &name) {
  auto d = fs::temp_directory_path() / ("dmnet_train_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Tensor Randn(std::vector<int64_t> shape, uint64_t seed) {
  auto g = torch::make_generator<at::CPUGeneratorImpl>(seed);
  return torch::randn(shape, g, torch::TensorOptions().dtype(torch::kFloat64));
}

// Two short synthetic utterances, noise only, under `root`/corpus.
std::string TinyCorpus(const fs::path &root) {
  fs::create_directories(root / "src" / "clean");
  fs::create_directories(root / "src" / "noise");
  WriteWav((root / "src" / "clean" / "p226_001.wav").string(),
           SynthesizeSpeechLike(0.25, 11));
  WriteWav((root / "src" / "clean" / "p227_002.wav").string(),
           SynthesizeSpeechLike(0.3, 12));
  WriteWav((root / "src" / "noise" / "n.wav").string(),
           SynthesizeNoise(1.0, NoiseColor::kPink, 13));
  CorpusConfig cc;
  cc.clean_list = (root / "src" / "clean").string();
  cc.noise_list = (root / "src" / "noise").string();
  cc.count = 2;
  cc.seed = 3;
  cc.validation_speakers.clear();
  return BuildCorpus(cc, (root / "corpus").string()).manifest_path;
}

ModelConfig FastConfig() {
  auto m = TinyModelConfig(Variant::kDM2);
  m.stft.hop = 16;
  return m;
}

TrainConfig FastTrain(int64_t steps) {
  TrainConfig t;
  t.steps = steps;
  t.batch_size = 2;
  t.segment_s = 0.25;
  t.checkpoint_every = 3;
  t.log_every = 1000;
  t.seed = 9;
  return t;
}

struct ScopedEnv {
  ScopedEnv(const char *k, const char *v) : key(k) { setenv(k, v, 1); }
  ~ScopedEnv() { unsetenv(key); }
  const char *key;
};

}  // namespace

TEST_SUITE("training") {

TEST_CASE("magnitude loss values") {
  auto a = Randn({2, 5, 7}, 1);
  CHECK(LossMagnitude(a, a).item<double>() == 0.0);
  CHECK(LossMagnitude(a, a + 1.0).item<double>() == doctest::Approx(1.0).epsilon(1e-14));
  auto b = Randn({2, 5, 7}, 2);
  double s = 0.0;
  auto pa = a.contiguous().data_ptr<double>(), pb = b.contiguous().data_ptr<double>();
  for (int i = 0; i < 70; ++i) s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
  CHECK(LossMagnitude(a, b).item<double>() == doctest::Approx(s / 70).epsilon(1e-12));
  CHECK_THROWS_AS(LossMagnitude(a, Randn({2, 5, 6}, 3)), Error);
}

TEST_CASE("anti-wrapping is 2pi periodic and bounded by pi") {
  auto x = Randn({1000}, 4) * 20.0;
  auto a = AntiWrap(x);
  CHECK(a.max().item<double>() <= kPi + 1e-12);
  CHECK(a.min().item<double>() >= 0.0);
  CHECK(torch::allclose(AntiWrap(x + 2 * kPi), a, 0, 1e-9));
  CHECK(torch::allclose(AntiWrap(-x), a, 0, 1e-12));
  auto small = Randn({100}, 5).clamp(-3.0, 3.0);
  CHECK(torch::equal(AntiWrap(small), small.abs()));
}

TEST_CASE("phase offset by pi") {
  auto t = (Randn({1, 6, 9}, 6) * 2.0).remainder(2 * kPi) - kPi;
  auto l0 = LossPhaseAntiWrap(t, t);
  CHECK(l0.total.item<double>() == 0.0);
  // A wrapped copy has zero loss; a constant pi offset only hits the IP term.
  auto wrapped = t + 2 * kPi;
  CHECK(LossPhaseAntiWrap(wrapped, t).total.item<double>() < 1e-12);
  auto l = LossPhaseAntiWrap(t + kPi, t);
  CHECK(l.instantaneous.item<double>() == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(l.group_delay.item<double>() < 1e-12);
  CHECK(l.inst_freq.item<double>() < 1e-12);
}

TEST_CASE("time and complex losses") {
  auto x = Randn({2, 300}, 7);
  CHECK(LossTime(x, -x).item<double>() ==
        doctest::Approx(2.0 * x.abs().mean().item<double>()).epsilon(1e-13));
  auto c = torch::complex(Randn({3, 4}, 8), Randn({3, 4}, 9));
  CHECK(LossComplex(c, c).item<double>() == 0.0);
  auto shift = torch::complex(torch::full({3, 4}, 1.0, torch::kFloat64),
                              torch::full({3, 4}, 2.0, torch::kFloat64));
  CHECK(LossComplex(c + shift, c).item<double>() == doctest::Approx(5.0).epsilon(1e-13));
}

TEST_CASE("consistency of a genuine spectrogram") {
  StftConfig cfg;
  Stft stft(cfg);
  auto x = Randn({1, 4000}, 10);
  auto spec = stft.Forward(x);
  CHECK(LossConsistency(spec, stft, 4000).item<double>() < 1e-10);
  auto noise = torch::complex(Randn(spec.sizes().vec(), 11), Randn(spec.sizes().vec(), 12));
  CHECK(LossConsistency(spec + noise, stft, 4000).item<double>() > 1e-3);
}

TEST_CASE("zero weights switch terms off") {
  torch::manual_seed(0);
  DmNet model(TinyModelConfig(Variant::kDM2));
  model->to(torch::kFloat64);
  Stft stft(model->config().stft);
  auto clean = Randn({1, 96}, 13) * 0.3;
  auto in = stft.Analyze(clean + 0.1 * Randn({1, 96}, 14));
  auto out = model->forward(in.magnitude, in.phase);
  LossWeights w;
  w.phase = w.complex = w.time = w.consistency = 0.0;
  auto loss = TotalLoss(out, MakeTarget(stft, clean), stft, w);
  CHECK_FALSE(loss.phase.defined());
  CHECK_FALSE(loss.consistency.defined());
  loss.total.backward();
  // Magnitude-only loss leaves the phase branch without signal.
  auto params = model->named_parameters();
  for (const auto &name : {"phase_real.weight", "phase_imag.weight"}) {
    auto g = params[name].grad();
    CHECK((!g.defined() || g.abs().max().item<double>() == 0.0));
  }
  CHECK(params["alpha"].grad().abs().item<double>() > 0.0);
  CHECK(params["lsig_slope"].grad().abs().max().item<double>() > 0.0);
  w = LossWeights{};
  w.mag = -1.0;
  CHECK_THROWS_AS(w.Validate(), Error);
}

TEST_CASE("analytic gradients agree with finite differences") {
  for (const auto &p : testing::TinyGradientCheck()) {
    INFO(p.name << " analytic " << p.analytic << " numeric " << p.numeric);
    CHECK(std::abs(p.analytic) > 0.0);
    CHECK(p.rel_error() < 1e-4);
  }
}

TEST_CASE("adamw with zero lr leaves weights unchanged") {
  torch::manual_seed(1);
  DmNet model(TinyModelConfig(Variant::kDM2));
  auto before = ModelState(*model);
  for (auto &[k, v] : before) v = v.clone();
  AdamWOptions o;
  o.lr = 0.0;
  AdamW opt(model->named_parameters(), o);
  Stft stft(model->config().stft);
  auto x = Randn({1, 96}, 15).to(torch::kFloat32);
  auto in = stft.Analyze(x);
  auto out = model->forward(in.magnitude, in.phase);
  TotalLoss(out, MakeTarget(stft, x), stft, {}).total.backward();
  opt.Step();
  for (const auto &[k, v] : ModelState(*model)) CHECK(torch::equal(v, before.at(k)));
  CHECK(opt.steps() == 1);
}

TEST_CASE("adamw matches a hand-computed step") {
  auto p = torch::tensor({1.0, -2.0}, torch::kFloat64).requires_grad_(true);
  torch::OrderedDict<std::string, Tensor> params;
  params.insert("p", p);
  AdamWOptions o;
  o.lr = 0.1;
  AdamW opt(params, o);
  p.mutable_grad() = torch::tensor({0.5, 0.25}, torch::kFloat64);
  opt.Step();
  // First step: m_hat = g, v_hat = g^2, so the update is lr * sign(g) up to eps.
  const double g0 = 0.5, g1 = 0.25;
  const double e0 = 1.0 * (1 - 0.1 * 0.01) - 0.1 * g0 / (g0 + 1e-8);
  const double e1 = -2.0 * (1 - 0.1 * 0.01) - 0.1 * g1 / (g1 + 1e-8);
  CHECK(p[0].item<double>() == doctest::Approx(e0).epsilon(1e-14));
  CHECK(p[1].item<double>() == doctest::Approx(e1).epsilon(1e-14));
  auto st = opt.State();
  CHECK(st.count("exp_avg/p") == 1);
  CHECK(st.count("exp_avg_sq/p") == 1);
}

TEST_CASE("gradient clipping") {
  auto a = torch::zeros({2}, torch::kFloat64).requires_grad_(true);
  a.mutable_grad() = torch::tensor({3.0, 4.0}, torch::kFloat64);
  CHECK(ClipGradNorm({a}, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad().norm().item<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ClipGradNorm({a}, 10.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a.grad().norm().item<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("checkpoint round trip") {
  auto dir = FreshDir("ckpt");
  torch::manual_seed(2);
  auto cfg = TinyModelConfig(Variant::kU1);
  DmNet model(cfg);
  Checkpoint c;
  c.model_config = cfg;
  c.variant = "U1";
  c.step = 17;
  c.manifest_hash = "abc";
  c.model = ModelState(*model);
  c.optimizer["steps"] = torch::tensor({int64_t{17}});
  const auto path = (dir / "a.ckpt").string();
  SaveCheckpoint(path, c);
  auto back = LoadCheckpoint(path);
  CHECK(back.step == 17);
  CHECK(back.variant == "U1");
  CHECK(back.manifest_hash == "abc");
  CHECK_FALSE(back.has_alpha);
  REQUIRE(back.model.size() == c.model.size());
  for (const auto &[k, v] : c.model) CHECK(torch::equal(back.model.at(k), v));
  CHECK(torch::equal(back.optimizer.at("steps"), c.optimizer.at("steps")));

  // Saving the reloaded checkpoint reproduces the file byte for byte.
  SaveCheckpoint((dir / "b.ckpt").string(), back);
  CHECK(ReadBytes(dir / "a.ckpt") == ReadBytes(dir / "b.ckpt"));

  auto loaded = LoadModel(back, &cfg);
  for (const auto &[k, v] : ModelState(*loaded)) CHECK(torch::equal(v, c.model.at(k)));

  auto other = cfg;
  other.channels = 6;
  CHECK_THROWS_AS(LoadModel(back, &other), Error);
  try {
    LoadModel(back, &other);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kCheckpoint);
  }

  // A tampered config is refused.
  auto bytes = ReadBytes(dir / "a.ckpt");
  auto pos = bytes.find("\"channels\":4");
  REQUIRE(pos != std::string::npos);
  bytes[pos + 11] = '5';
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << bytes;
  CHECK_THROWS_AS(LoadCheckpoint((dir / "bad.ckpt").string()), Error);
  CHECK_THROWS_AS(LoadCheckpoint((dir / "missing.ckpt").string()), Error);
}

TEST_CASE("zero steps writes only the initial checkpoint") {
  auto root = FreshDir("zero");
  auto manifest = TinyCorpus(root);
  auto r = Train(FastConfig(), FastTrain(0), manifest, (root / "run").string());
  CHECK(r.final_step == 0);
  CHECK(r.log.empty());
  int ckpts = 0;
  for (const auto &e : fs::directory_iterator(root / "run"))
    if (e.path().extension() == ".ckpt") ++ckpts;
  CHECK(ckpts == 1);
  auto c = LoadCheckpoint(r.last_checkpoint);
  CHECK(c.step == 0);
  REQUIRE(c.has_alpha);
  CHECK(c.alpha == FastConfig().alpha_init);
}

TEST_CASE("resume continues bit-identically") {
  ScopedEnv det(kDeterministicEnv, "1");
  auto root = FreshDir("resume");
  auto manifest = TinyCorpus(root);
  auto cfg = FastConfig();
  auto tc = FastTrain(8);

  auto full = Train(cfg, tc, manifest, (root / "full").string());
  CHECK(full.final_step == 8);

  TrainOptions stop;
  stop.stop_after = 4;
  auto part = Train(cfg, tc, manifest, (root / "part").string(), stop);
  CHECK(part.final_step == 4);
  // The early stop leaves a checkpoint at step 4; resume picks it up.
  TrainOptions resume;
  resume.resume = (root / "part").string();
  auto rest = Train(cfg, tc, manifest, (root / "part").string(), resume);
  CHECK(rest.final_step == 8);

  CHECK(ReadBytes(root / "full" / kTrainLogName) == ReadBytes(root / "part" / kTrainLogName));
  auto a = LoadCheckpoint(full.last_checkpoint);
  auto b = LoadCheckpoint(rest.last_checkpoint);
  for (const auto &[k, v] : a.model) CHECK(torch::equal(v, b.model.at(k)));
  CHECK(a.alpha == b.alpha);

  // A different model config cannot resume this run.
  auto other = cfg;
  other.channels = 6;
  CHECK_THROWS_AS(Train(other, tc, manifest, (root / "part").string(), resume), Error);
}

TEST_CASE("non-finite loss aborts with a snapshot") {
  auto root = FreshDir("nan");
  auto manifest = TinyCorpus(root);
  TrainOptions o;
  o.inject_nan_at = 2;
  try {
    Train(FastConfig(), FastTrain(5), manifest, (root / "run").string(), o);
    FAIL("expected a numeric error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
  CHECK(fs::exists(root / "run" / "nan_snapshot_step2.ckpt"));
  CHECK(fs::exists(root / "run" / "nan_diagnostics.json"));
  auto snap = LoadCheckpoint((root / "run" / "nan_snapshot_step2.ckpt").string());
  CHECK(snap.step == 1);
}

}  // TEST_SUITE
