// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/model.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "dmnet/error.h"
#include "dmnet/log.h"

namespace dmnet {

namespace nn = torch::nn;
using nlohmann::json;
using torch::Tensor;

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kS1: return "S1";
    case Variant::kS2: return "S2";
    case Variant::kU1: return "U1";
    case Variant::kDM1: return "DM1";
    case Variant::kDM2: return "DM2";
  }
  return "?";
}

Variant ParseVariant(const std::string &name) {
  std::string u = name;
  for (auto &c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "S1") return Variant::kS1;
  if (u == "S2") return Variant::kS2;
  if (u == "U1") return Variant::kU1;
  if (u == "DM1") return Variant::kDM1;
  if (u == "DM2") return Variant::kDM2;
  Throw(ErrorKind::kConfig, "unknown variant '" + name + "' (s1, s2, u1, dm1, dm2)");
}

bool UsesMaskPath(Variant v) { return v != Variant::kS2; }
bool UsesMapPath(Variant v) { return v != Variant::kS1; }
bool UsesOmega(Variant v) { return v == Variant::kU1 || v == Variant::kDM1; }

double ModelConfig::EffectiveOmega() const {
  return variant == Variant::kDM2 ? 0.0 : omega;
}

void ModelConfig::Validate() const {
  stft.Validate();
  DMNET_CHECK(channels > 0 && n_conformers >= 0 && n_heads > 0 && dense_depth > 0,
              kConfig, "model sizes must be positive");
  DMNET_CHECK(channels % n_heads == 0, kConfig,
              "channels must be divisible by n_heads");
  DMNET_CHECK(conv_kernel > 0 && conv_kernel % 2 == 1, kConfig,
              "conv_kernel must be odd");
  DMNET_CHECK(ffn_mult > 0, kConfig, "ffn_mult must be positive");
  DMNET_CHECK(omega >= 0.0 && omega <= 1.0, kConfig, "omega must lie in [0, 1]");
  DMNET_CHECK(std::isfinite(alpha_init), kConfig, "alpha_init must be finite");
  DMNET_CHECK(lsig_beta > 0.0, kConfig, "lsig_beta must be positive");
}

ModelConfig TinyModelConfig(Variant variant) {
  ModelConfig c;
  c.variant = variant;
  c.channels = 4;
  c.n_conformers = 1;
  c.n_heads = 2;
  c.dense_depth = 2;
  c.conv_kernel = 3;
  c.ffn_mult = 2;
  c.stft.n_fft = 32;
  c.stft.hop = 8;
  c.stft.win_length = 32;
  return c;
}

void to_json(json &j, const StftConfig &c) {
  j = json{{"n_fft", c.n_fft},
           {"hop", c.hop},
           {"win_length", c.win_length},
           {"window", WindowKindName(c.window)},
           {"compress_exponent", c.compress_exponent}};
}

void from_json(const json &j, StftConfig &c) {
  DMNET_CHECK(j.is_object(), kConfig, "stft config must be an object");
  for (const auto &[key, _] : j.items()) {
    DMNET_CHECK(key == "n_fft" || key == "hop" || key == "win_length" ||
                    key == "window" || key == "compress_exponent",
                kConfig, "unknown stft key '" + key + "'");
  }
  StftConfig d;
  d.n_fft = j.value("n_fft", d.n_fft);
  d.hop = j.value("hop", d.hop);
  d.win_length = j.value("win_length", d.win_length);
  if (j.contains("window")) d.window = ParseWindowKind(j.at("window").get<std::string>());
  d.compress_exponent = j.value("compress_exponent", d.compress_exponent);
  d.Validate();
  c = d;
}

void to_json(json &j, const ModelConfig &c) {
  j = json{{"variant", VariantName(c.variant)},
           {"channels", c.channels},
           {"n_conformers", c.n_conformers},
           {"n_heads", c.n_heads},
           {"dense_depth", c.dense_depth},
           {"conv_kernel", c.conv_kernel},
           {"ffn_mult", c.ffn_mult},
           {"omega", c.omega},
           {"alpha_init", c.alpha_init},
           {"lsig_beta", c.lsig_beta},
           {"stft", c.stft}};
}

void from_json(const json &j, ModelConfig &c) {
  static const char *kKeys[] = {"variant", "channels", "n_conformers", "n_heads",
                                "dense_depth", "conv_kernel", "ffn_mult", "omega",
                                "alpha_init", "lsig_beta", "stft"};
  DMNET_CHECK(j.is_object(), kConfig, "model config must be an object");
  for (const auto &[key, _] : j.items()) {
    DMNET_CHECK(std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys),
                kConfig, "unknown model key '" + key + "'");
  }
  ModelConfig d;
  if (j.contains("variant")) d.variant = ParseVariant(j.at("variant").get<std::string>());
  d.channels = j.value("channels", d.channels);
  d.n_conformers = j.value("n_conformers", d.n_conformers);
  d.n_heads = j.value("n_heads", d.n_heads);
  d.dense_depth = j.value("dense_depth", d.dense_depth);
  d.conv_kernel = j.value("conv_kernel", d.conv_kernel);
  d.ffn_mult = j.value("ffn_mult", d.ffn_mult);
  d.omega = j.value("omega", d.omega);
  d.alpha_init = j.value("alpha_init", d.alpha_init);
  d.lsig_beta = j.value("lsig_beta", d.lsig_beta);
  if (j.contains("stft")) d.stft = j.at("stft").get<StftConfig>();
  d.Validate();
  c = d;
}

// ------------------------------------------------------------ modules ---

namespace {

nn::Sequential NormAct(int64_t c) {
  return nn::Sequential(
      nn::InstanceNorm2d(nn::InstanceNorm2dOptions(c).affine(true)),
      nn::PReLU(nn::PReLUOptions().num_parameters(c)));
}

}  // namespace

DenseBlockImpl::DenseBlockImpl(int64_t channels, int depth) {
  for (int i = 0; i < depth; ++i) {
    const int64_t dil = int64_t{1} << i;
    nn::Sequential layer(
        nn::Conv2d(nn::Conv2dOptions(channels * (i + 1), channels, {3, 3})
                       .dilation({dil, 1})
                       .padding({dil, 1})),
        nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(true)),
        nn::PReLU(nn::PReLUOptions().num_parameters(channels)));
    layers_.push_back(register_module("layer" + std::to_string(i), layer));
  }
}

Tensor DenseBlockImpl::forward(Tensor x) {
  Tensor skip = x, y;
  for (auto &layer : layers_) {
    y = layer->forward(skip);
    skip = torch::cat({y, skip}, 1);
  }
  return y;
}

EncoderImpl::EncoderImpl(const ModelConfig &cfg) {
  const int64_t c = cfg.channels;
  conv_in_ = register_module(
      "conv_in", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(2, c, {1, 1}))));
  conv_in_->extend(*NormAct(c));
  dense_ = register_module("dense", DenseBlock(c, cfg.dense_depth));
  conv_down_ = register_module(
      "conv_down",
      nn::Sequential(nn::Conv2d(
          nn::Conv2dOptions(c, c, {1, 3}).stride({1, 2}).padding({0, 1}))));
  conv_down_->extend(*NormAct(c));
}

Tensor EncoderImpl::forward(Tensor x) {
  x = conv_in_->forward(x);
  x = dense_->forward(x);
  return conv_down_->forward(x);
}

ConformerImpl::ConformerImpl(const ModelConfig &cfg) {
  const int64_t c = cfg.channels;
  const int64_t h = c * cfg.ffn_mult;
  auto make_ff = [&] {
    return nn::Sequential(nn::LayerNorm(nn::LayerNormOptions({c})),
                          nn::Linear(c, h), nn::SiLU(), nn::Linear(h, c));
  };
  ff1_ = register_module("ff1", make_ff());
  attn_norm_ = register_module("attn_norm", nn::LayerNorm(nn::LayerNormOptions({c})));
  attn_ = register_module("attn", nn::MultiheadAttention(
                                      nn::MultiheadAttentionOptions(c, cfg.n_heads)));
  conv_norm_ = register_module("conv_norm", nn::LayerNorm(nn::LayerNormOptions({c})));
  conv_pw1_ = register_module("conv_pw1", nn::Linear(c, 2 * c));
  conv_dw_ = register_module(
      "conv_dw", nn::Conv1d(nn::Conv1dOptions(c, c, cfg.conv_kernel)
                                .groups(c)
                                .padding(cfg.conv_kernel / 2)));
  conv_dw_norm_ = register_module("conv_dw_norm", nn::LayerNorm(nn::LayerNormOptions({c})));
  conv_pw2_ = register_module("conv_pw2", nn::Linear(c, c));
  ff2_ = register_module("ff2", make_ff());
}

Tensor ConformerImpl::forward(Tensor x, const Tensor &pad_mask) {
  x = x + 0.5 * ff1_->forward(x);

  // MultiheadAttention is sequence-first.
  auto q = attn_norm_->forward(x).transpose(0, 1);
  auto attn = std::get<0>(attn_->forward(q, q, q, pad_mask, /*need_weights=*/false));
  x = x + attn.transpose(0, 1);

  auto y = torch::glu(conv_pw1_->forward(conv_norm_->forward(x)), -1);
  // Padded positions must not leak into valid ones through the kernel.
  if (pad_mask.defined()) y = y.masked_fill(pad_mask.unsqueeze(-1), 0.0);
  y = conv_dw_->forward(y.transpose(1, 2)).transpose(1, 2);
  y = conv_pw2_->forward(torch::silu(conv_dw_norm_->forward(y)));
  x = x + y;

  return x + 0.5 * ff2_->forward(x);
}

TsConformerImpl::TsConformerImpl(const ModelConfig &cfg) {
  time_ = register_module("time", Conformer(cfg));
  freq_ = register_module("freq", Conformer(cfg));
}

Tensor TsConformerImpl::forward(Tensor x, const Tensor &frames) {
  const int64_t b = x.size(0), c = x.size(1), t = x.size(2), f = x.size(3);
  // Time pass: sequences of T frames, one per (batch, bin).
  auto seq = x.permute({0, 3, 2, 1}).reshape({b * f, t, c});
  Tensor mask;
  if (frames.defined()) {
    auto idx = torch::arange(t, torch::TensorOptions().dtype(torch::kLong));
    mask = idx.unsqueeze(0) >= frames.to(torch::kLong).unsqueeze(1);  // [B, T]
    mask = mask.unsqueeze(1).expand({b, f, t}).reshape({b * f, t});
  }
  seq = time_->forward(seq, mask);
  // Frequency pass: sequences of F' bins, one per (batch, frame).
  seq = seq.reshape({b, f, t, c}).permute({0, 2, 1, 3}).reshape({b * t, f, c});
  seq = freq_->forward(seq);
  return seq.reshape({b, t, f, c}).permute({0, 3, 1, 2});
}

DecoderBodyImpl::DecoderBodyImpl(const ModelConfig &cfg, int64_t out_channels)
    : bins_(cfg.num_bins()) {
  const int64_t c = cfg.channels;
  dense_ = register_module("dense", DenseBlock(c, cfg.dense_depth));
  // (F' - 1) * 2 - 2 + 3 + op = F
  const int64_t op = bins_ - (2 * cfg.latent_bins() - 1);
  up_ = register_module(
      "up", nn::Sequential(nn::ConvTranspose2d(
                nn::ConvTranspose2dOptions(c, c, {1, 3})
                    .stride({1, 2})
                    .padding({0, 1})
                    .output_padding({0, op}))));
  up_->extend(*NormAct(c));
  proj_ = register_module("proj", nn::Conv2d(nn::Conv2dOptions(c, out_channels, {1, 1})));
}

Tensor DecoderBodyImpl::forward(Tensor x) {
  x = up_->forward(dense_->forward(x));
  return proj_->forward(x);
}

Tensor ModelOutput::Complex(double compress_exponent) const {
  return torch::polar(DecompressMagnitude(mag_final, compress_exponent), phase);
}

Tensor Fuse(const Tensor &mask_out, const Tensor &map_out, Variant variant,
            double omega, const Tensor &alpha, const Tensor &input_mag) {
  DMNET_CHECK(omega >= 0.0 && omega <= 1.0, kConfig, "omega must lie in [0, 1]");
  switch (variant) {
    case Variant::kS1:
      return mask_out;
    case Variant::kS2:
      DMNET_CHECK(input_mag.sizes() == map_out.sizes(), kDimension,
                  "S2 skip: shape mismatch");
      return map_out + input_mag;
    case Variant::kU1:
    case Variant::kDM1:
      DMNET_CHECK(mask_out.sizes() == map_out.sizes(), kDimension,
                  "fusion: shape mismatch");
      return omega * mask_out + (1.0 - omega) * map_out;
    case Variant::kDM2:
      DMNET_CHECK(mask_out.sizes() == map_out.sizes(), kDimension,
                  "fusion: shape mismatch");
      DMNET_CHECK(alpha.defined(), kConfig, "DM2 fusion needs alpha");
      // alpha is unconstrained; a negative value must not produce a
      // negative magnitude.
      return (map_out + alpha * mask_out).clamp_min(0.0);
  }
  return mask_out;
}

DmNetImpl::DmNetImpl(const ModelConfig &cfg) : cfg_(cfg) {
  cfg_.Validate();
  encoder_ = register_module("encoder", Encoder(cfg_));
  for (int i = 0; i < cfg_.n_conformers; ++i)
    blocks_.push_back(register_module("ts_conformer" + std::to_string(i), TsConformer(cfg_)));
  mag_decoder_ = register_module("mag_decoder", DecoderBody(cfg_, 1));
  if (cfg_.variant == Variant::kU1)
    map_decoder_ = register_module("map_decoder", DecoderBody(cfg_, 1));
  phase_decoder_ = register_module("phase_decoder", DecoderBody(cfg_, cfg_.channels));
  phase_real_ = register_module("phase_real", nn::Conv2d(nn::Conv2dOptions(cfg_.channels, 1, {1, 1})));
  phase_imag_ = register_module("phase_imag", nn::Conv2d(nn::Conv2dOptions(cfg_.channels, 1, {1, 1})));
  if (UsesMaskPath(cfg_.variant))
    lsig_slope_ = register_parameter("lsig_slope", torch::ones({cfg_.num_bins()}));
  if (cfg_.variant == Variant::kDM2)
    alpha_ = register_parameter("alpha", torch::full({}, cfg_.alpha_init));
}

Tensor DmNetImpl::Encode(const Tensor &mag, const Tensor &phase) {
  DMNET_CHECK(mag.dim() == 3 && mag.sizes() == phase.sizes(), kDimension,
              "magnitude/phase must be matching [B, T, F] tensors");
  DMNET_CHECK(mag.size(2) == cfg_.num_bins(), kDimension,
              "expected " + std::to_string(cfg_.num_bins()) + " bins, got " +
                  std::to_string(mag.size(2)));
  return encoder_->forward(torch::stack({mag, phase}, 1));
}

Tensor DmNetImpl::RunConformers(Tensor latent, const Tensor &frames) {
  for (auto &b : blocks_) latent = b->forward(latent, frames);
  return latent;
}

Tensor DmNetImpl::MagnitudeBody(const Tensor &latent) {
  return mag_decoder_->forward(latent).squeeze(1);
}

Tensor DmNetImpl::LSigmoid(const Tensor &u) const {
  return cfg_.lsig_beta * torch::sigmoid(lsig_slope_ * u);
}

Tensor DmNetImpl::DecodePhase(const Tensor &latent) {
  auto feat = phase_decoder_->forward(latent);
  auto re = phase_real_->forward(feat).squeeze(1);
  auto im = phase_imag_->forward(feat).squeeze(1);
  auto phase = torch::atan2(im, re);
  // atan2 yields -pi for a -0 imaginary part; fold onto +pi.
  return torch::where(phase <= -std::numbers::pi,
                      torch::full_like(phase, std::numbers::pi), phase);
}

ModelOutput DmNetImpl::forward(const Tensor &mag, const Tensor &phase,
                               const Tensor &frames, const ForwardOptions &opts) {
  auto latent = RunConformers(Encode(mag, phase), frames);
  ModelOutput out;
  const Variant v = cfg_.variant;
  auto u = MagnitudeBody(latent);
  auto zeros = torch::zeros_like(mag);
  out.mag_mask_path = zeros;
  out.mag_map_path = zeros;
  if (UsesMaskPath(v)) {
    auto gain = opts.force_unit_mask ? torch::ones_like(u) : LSigmoid(u);
    out.mag_mask_path = mag * gain;
  }
  if (UsesMapPath(v)) {
    auto u_map = v == Variant::kU1 ? map_decoder_->forward(latent).squeeze(1) : u;
    out.mag_map_path = opts.zero_map_path ? zeros : torch::relu(u_map);
  }
  out.alpha = alpha_;
  out.mag_final = Fuse(out.mag_mask_path, out.mag_map_path, v,
                       cfg_.EffectiveOmega(), alpha_, mag);
  out.phase = opts.pass_input_phase ? phase : DecodePhase(latent);
  return out;
}

int64_t CountParameters(torch::nn::Module &module) {
  int64_t n = 0;
  for (const auto &p : module.parameters()) n += p.numel();
  return n;
}

int64_t CountParameters(const ModelConfig &cfg) {
  DmNet model(cfg);
  return CountParameters(*model);
}

int64_t MagnitudeBodyParameters(const ModelConfig &cfg) {
  ModelConfig c = cfg;
  c.Validate();
  DecoderBody body(c, 1);
  return CountParameters(*body);
}

int64_t CopyParameters(torch::nn::Module &from, torch::nn::Module &to) {
  torch::NoGradGuard no_grad;
  auto dst = to.named_parameters();
  int64_t n = 0;
  for (const auto &item : from.named_parameters()) {
    auto *p = dst.find(item.key());
    if (p == nullptr || p->sizes() != item.value().sizes()) continue;
    p->copy_(item.value());
    ++n;
  }
  return n;
}

Waveform Restore(DmNet &model, const Waveform &input,
                 const ForwardOptions &opts) {
  DMNET_CHECK(input.sample_rate == kSampleRate, kData, "restore expects 16 kHz");
  DMNET_CHECK(input.size() > 0, kData, "restore: empty input");
  const auto &cfg = model->config();
  Stft stft(cfg.stft);
  const auto dtype = model->parameters().front().scalar_type();
  torch::NoGradGuard no_grad;

  auto y = ToTensor(input, torch::kFloat64);
  const int64_t length = input.size();
  const double energy = y.square().sum().item<double>();
  const double norm = energy > 0.0 ? std::sqrt(static_cast<double>(length) / energy) : 1.0;
  y = y * norm;
  if (length < cfg.stft.win_length)
    y = torch::constant_pad_nd(y, {0, cfg.stft.win_length - length});
  auto triple = stft.Analyze(y.to(dtype).unsqueeze(0));
  auto out = model->forward(triple.magnitude, triple.phase, {}, opts);
  auto wav = stft.Synthesize({out.mag_final, out.phase}, y.size(0));
  wav = wav.squeeze(0).to(torch::kFloat64).narrow(0, 0, length) / norm;
  return ToWaveform(wav, input.id);
}

}  // namespace dmnet
