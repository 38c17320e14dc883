// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dmnet/checkpoint.h"
#include "dmnet/error.h"
#include "dmnet/log.h"
#include "dmnet/optim.h"
#include "dmnet/random.h"
#include "dmnet/runtime.h"

namespace dmnet {

namespace fs = std::filesystem;
using nlohmann::json;
using torch::Tensor;

namespace {

const char *kTrainKeys[] = {"lr", "beta1", "beta2", "eps", "weight_decay", "steps",
                            "batch_size", "segment_s", "loss_weights", "seed",
                            "checkpoint_every", "log_every", "grad_clip",
                            "warmup_steps"};

// Fields that may change between a run and its resumption.
json ResumeInvariant(const TrainConfig &c) {
  json j = c;
  j.erase("steps");
  j.erase("checkpoint_every");
  j.erase("log_every");
  return j;
}

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string ReadFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  DMNET_CHECK(is.good(), kData, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

constexpr const char *kLogHeader =
    "step\tlr\ttotal\tmag\tphase\tcomplex\ttime\tconsistency\tgrad_norm\talpha";

// Keeps the header and the lines of steps <= last_step.
void TruncateLog(const std::string &path, int64_t last_step) {
  std::vector<std::string> keep;
  {
    std::ifstream is(path);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line.rfind("step\t", 0) == 0) continue;
      if (std::stoll(line.substr(0, line.find('\t'))) <= last_step) keep.push_back(line);
    }
  }
  std::ofstream os(path, std::ios::trunc);
  os << kLogHeader << '\n';
  for (const auto &l : keep) os << l << '\n';
}

}  // namespace

void TrainConfig::Validate() const {
  DMNET_CHECK(lr > 0.0, kConfig, "lr must be > 0");
  DMNET_CHECK(steps >= 0, kConfig, "steps must be >= 0");
  DMNET_CHECK(batch_size > 0, kConfig, "batch_size must be > 0");
  DMNET_CHECK(segment_s > 0.0, kConfig, "segment_s must be > 0");
  DMNET_CHECK(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, kConfig,
              "betas must lie in [0, 1)");
  DMNET_CHECK(eps > 0.0 && weight_decay >= 0.0 && grad_clip >= 0.0, kConfig,
              "eps must be > 0, weight_decay and grad_clip >= 0");
  DMNET_CHECK(checkpoint_every > 0 && log_every > 0 && warmup_steps >= 0, kConfig,
              "checkpoint_every and log_every must be > 0");
  loss_weights.Validate();
}

void to_json(json &j, const TrainConfig &c) {
  j = json{{"lr", c.lr},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"eps", c.eps},
           {"weight_decay", c.weight_decay},
           {"steps", c.steps},
           {"batch_size", c.batch_size},
           {"segment_s", c.segment_s},
           {"loss_weights", c.loss_weights},
           {"seed", c.seed},
           {"checkpoint_every", c.checkpoint_every},
           {"log_every", c.log_every},
           {"grad_clip", c.grad_clip},
           {"warmup_steps", c.warmup_steps}};
}

void from_json(const json &j, TrainConfig &c) {
  DMNET_CHECK(j.is_object(), kConfig, "train config must be an object");
  for (const auto &[key, _] : j.items()) {
    DMNET_CHECK(std::find(std::begin(kTrainKeys), std::end(kTrainKeys), key) !=
                    std::end(kTrainKeys),
                kConfig, "unknown train key '" + key + "'");
  }
  TrainConfig d;
  d.lr = j.value("lr", d.lr);
  d.beta1 = j.value("beta1", d.beta1);
  d.beta2 = j.value("beta2", d.beta2);
  d.eps = j.value("eps", d.eps);
  d.weight_decay = j.value("weight_decay", d.weight_decay);
  d.steps = j.value("steps", d.steps);
  d.batch_size = j.value("batch_size", d.batch_size);
  d.segment_s = j.value("segment_s", d.segment_s);
  if (j.contains("loss_weights")) d.loss_weights = j.at("loss_weights").get<LossWeights>();
  d.seed = j.value("seed", d.seed);
  d.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  d.log_every = j.value("log_every", d.log_every);
  d.grad_clip = j.value("grad_clip", d.grad_clip);
  d.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  d.Validate();
  c = d;
}

std::string StepLog::Line() const {
  std::ostringstream os;
  os << step << '\t' << Fmt(lr) << '\t' << Fmt(total) << '\t' << Fmt(mag) << '\t'
     << Fmt(phase) << '\t' << Fmt(complex) << '\t' << Fmt(time) << '\t'
     << Fmt(consistency) << '\t' << Fmt(grad_norm) << '\t'
     << (std::isnan(alpha) ? std::string("-") : Fmt(alpha));
  return os.str();
}

TrainData::TrainData(const std::string &manifest, int64_t min_length) {
  for (const auto &e : ReadManifest(manifest)) {
    if (e.split != "train") continue;
    auto clean = ReadWav(ManifestPath(manifest, e.clean_path));
    auto degraded = ReadWav(ManifestPath(manifest, e.degraded_path));
    DMNET_CHECK(clean.size() == degraded.size(), kData,
                "length mismatch between clean and degraded for " + e.id);
    DMNET_CHECK(clean.size() >= min_length, kData,
                e.id + " is shorter than one analysis window");
    max_length_ = std::max(max_length_, clean.size());
    clean_.push_back(std::move(clean.samples));
    degraded_.push_back(std::move(degraded.samples));
    ids_.push_back(e.id);
  }
  DMNET_CHECK(!clean_.empty(), kData, "manifest " + manifest + " has no training entries");
}

TrainData::Batch TrainData::Sample(uint64_t seed, int64_t step, int batch_size,
                                   int64_t segment, torch::Dtype dtype) const {
  Rng rng(MixSeed(seed, static_cast<uint64_t>(step)));
  Batch b;
  std::vector<double> deg(static_cast<size_t>(batch_size * segment), 0.0);
  std::vector<double> cln(deg.size(), 0.0);
  for (int i = 0; i < batch_size; ++i) {
    const int64_t k = rng.UniformInt(0, size() - 1);
    b.items.push_back(k);
    const auto &x = degraded_[k];
    const auto &y = clean_[k];
    const int64_t len = static_cast<int64_t>(x.size());
    const int64_t start = len > segment ? rng.UniformInt(0, len - segment) : 0;
    const int64_t n = std::min(segment, len);
    double energy = 0.0;
    for (int64_t t = 0; t < n; ++t) energy += x[start + t] * x[start + t];
    // Input level normalization; the target follows the same gain.
    const double norm = energy > 0.0 ? std::sqrt(static_cast<double>(segment) / energy) : 1.0;
    for (int64_t t = 0; t < n; ++t) {
      deg[i * segment + t] = x[start + t] * norm;
      cln[i * segment + t] = y[start + t] * norm;
    }
  }
  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  b.degraded = torch::from_blob(deg.data(), {batch_size, segment}, opts).to(dtype).clone();
  b.clean = torch::from_blob(cln.data(), {batch_size, segment}, opts).to(dtype).clone();
  return b;
}

std::string CheckpointName(int64_t step) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "checkpoint_%08lld.ckpt", static_cast<long long>(step));
  return buf;
}

std::string LatestCheckpoint(const std::string &dir) {
  std::string best;
  if (!fs::is_directory(dir)) return best;
  for (const auto &e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("checkpoint_", 0) == 0 && e.path().extension() == ".ckpt" &&
        (best.empty() || name > fs::path(best).filename().string()))
      best = e.path().string();
  }
  return best;
}

TrainResult Train(const ModelConfig &model_cfg, const TrainConfig &cfg,
                  const std::string &manifest, const std::string &out_dir,
                  const TrainOptions &options) {
  model_cfg.Validate();
  cfg.Validate();
  ApplyRuntimeSettings();
  const auto dtype = ComputeDtype();
  Stft stft(model_cfg.stft);
  TrainData data(manifest, model_cfg.stft.win_length);
  const std::string manifest_hash = Fnv1aHex(ReadFile(manifest));
  const int64_t segment = std::max<int64_t>(
      model_cfg.stft.win_length,
      std::min<int64_t>(std::llround(cfg.segment_s * kSampleRate), data.max_length()));

  fs::create_directories(out_dir);
  const std::string log_path = (fs::path(out_dir) / kTrainLogName).string();

  torch::manual_seed(MixSeed(cfg.seed, 0x6d6f64656cULL));
  DmNet model(model_cfg);
  model->to(dtype);
  auto params = model->named_parameters();
  std::vector<Tensor> param_list = model->parameters();
  AdamW optim(params, {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay});

  Checkpoint state;
  state.model_config = model_cfg;
  state.train_config = cfg;
  state.variant = VariantName(model_cfg.variant);
  state.manifest_hash = manifest_hash;
  int64_t step = 0;

  if (!options.resume.empty()) {
    std::string path = options.resume;
    if (fs::is_directory(path)) path = LatestCheckpoint(path);
    DMNET_CHECK(!path.empty(), kCheckpoint, "no checkpoint to resume in " + options.resume);
    Checkpoint ck = LoadCheckpoint(path);
    DMNET_CHECK(ConfigHash(ck.model_config) == ConfigHash(json(model_cfg)), kCheckpoint,
                "model config hash mismatch with " + path);
    DMNET_CHECK(ck.manifest_hash == manifest_hash, kData,
                "manifest differs from the one " + path + " was trained on");
    DMNET_CHECK(ResumeInvariant(ck.train_config.get<TrainConfig>()) == ResumeInvariant(cfg),
                kConfig, "training config differs from the checkpoint (only steps may change)");
    DMNET_CHECK(ck.model.begin()->second.scalar_type() == dtype, kCheckpoint,
                "checkpoint precision differs from the current float mode");
    LoadModelState(*model, ck.model);
    optim.LoadState(ck.optimizer);
    step = ck.step;
    state.alpha_trajectory = ck.alpha_trajectory;
    TruncateLog(log_path, step);
    LOG_INFO << "resumed " << path << " at step " << step;
  } else {
    std::ofstream os(log_path, std::ios::trunc);
    os << kLogHeader << '\n';
    if (model->has_alpha())
      state.alpha_trajectory.push_back({0, model->alpha().item<double>()});
  }

  TrainResult result;
  auto save = [&](int64_t at) {
    state.step = at;
    state.has_alpha = model->has_alpha();
    if (state.has_alpha) state.alpha = model->alpha().item<double>();
    state.model = ModelState(*model);
    state.optimizer = optim.State();
    result.last_checkpoint = (fs::path(out_dir) / CheckpointName(at)).string();
    SaveCheckpoint(result.last_checkpoint, state);
  };
  if (step == 0) save(0);

  std::ofstream log(log_path, std::ios::app);
  model->train();
  while (step < cfg.steps) {
    const int64_t s = step + 1;
    const double lr =
        cfg.warmup_steps > 0
            ? cfg.lr * std::min(1.0, static_cast<double>(s) / cfg.warmup_steps)
            : cfg.lr;
    optim.options().lr = lr;
    auto batch = data.Sample(cfg.seed, s, cfg.batch_size, segment, dtype);
    auto input = stft.Analyze(batch.degraded);
    auto target = MakeTarget(stft, batch.clean);
    optim.ZeroGrad();
    auto out = model->forward(input.magnitude, input.phase);
    auto loss = TotalLoss(out, target, stft, cfg.loss_weights);
    if (s == options.inject_nan_at) loss.total = loss.total * std::nan("");

    StepLog rec;
    rec.step = s;
    rec.lr = lr;
    rec.total = loss.total.item<double>();
    auto value = [](const Tensor &t) { return t.defined() ? t.item<double>() : 0.0; };
    rec.mag = value(loss.mag);
    rec.phase = value(loss.phase);
    rec.complex = value(loss.complex);
    rec.time = value(loss.time);
    rec.consistency = value(loss.consistency);
    if (!std::isfinite(rec.total)) {
      state.step = step;
      state.model = ModelState(*model);
      state.optimizer = optim.State();
      const auto snap = (fs::path(out_dir) / ("nan_snapshot_step" + std::to_string(s) + ".ckpt")).string();
      SaveCheckpoint(snap, state);
      json diag = {{"step", s}, {"lr", lr}, {"total", Fmt(rec.total)},
                   {"mag", Fmt(rec.mag)}, {"phase", Fmt(rec.phase)},
                   {"complex", Fmt(rec.complex)}, {"time", Fmt(rec.time)},
                   {"consistency", Fmt(rec.consistency)}, {"items", json::array()},
                   {"snapshot", snap}};
      for (auto k : batch.items) diag["items"].push_back(data.ids()[k]);
      std::ofstream(fs::path(out_dir) / "nan_diagnostics.json") << diag.dump(2) << '\n';
      Throw(ErrorKind::kNumeric, "non-finite loss at step " + std::to_string(s) +
                                     "; snapshot written to " + snap);
    }
    loss.total.backward();
    rec.grad_norm = ClipGradNorm(param_list, cfg.grad_clip);
    DMNET_CHECK(std::isfinite(rec.grad_norm), kNumeric,
                "non-finite gradient norm at step " + std::to_string(s));
    optim.Step();
    step = s;
    if (model->has_alpha()) {
      rec.alpha = model->alpha().item<double>();
      state.alpha_trajectory.push_back({s, rec.alpha});
    }
    log << rec.Line() << '\n';
    log.flush();
    result.log.push_back(rec);
    if (options.on_step) options.on_step(rec);
    if (s % cfg.log_every == 0)
      LOG_INFO << "step " << s << " loss " << rec.total << " mag " << rec.mag;
    if (s % cfg.checkpoint_every == 0 || s == cfg.steps || s == options.stop_after) save(s);
    if (s == options.stop_after) break;
  }
  result.final_step = step;
  if (result.last_checkpoint.empty())
    result.last_checkpoint = (fs::path(out_dir) / CheckpointName(step)).string();
  return result;
}

Preset GetPreset(const std::string &name, Variant variant) {
  Preset p;
  if (name == "full") {
    p.model.variant = variant;
  } else if (name == "tiny") {
    // Four channels cannot memorize even two utterances; sixteen can.
    p.model = TinyModelConfig(variant);
    p.model.channels = 16;
    p.model.n_heads = 4;
    p.model.stft.hop = 16;
    p.train.lr = 5e-3;
    p.train.segment_s = 0.25;
    p.train.steps = 2000;
    p.train.checkpoint_every = 500;
  } else {
    Throw(ErrorKind::kConfig, "unknown preset '" + name + "'");
  }
  return p;
}

}  // namespace dmnet
