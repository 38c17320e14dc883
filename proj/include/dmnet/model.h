// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_MODEL_H_
#define DMNET_MODEL_H_

#include <cstdint>
#include <string>

#include <torch/torch.h>

#include "dmnet/stft.h"
#include "dmnet/wav.h"
#include "json.hpp"

namespace dmnet {

enum class Variant { kS1, kS2, kU1, kDM1, kDM2 };

std::string VariantName(Variant v);  // "S1", ...
Variant ParseVariant(const std::string &name);  // case-insensitive

bool UsesMaskPath(Variant v);  // S1, U1, DM1, DM2
bool UsesMapPath(Variant v);   // S2, U1, DM1, DM2
bool UsesOmega(Variant v);     // U1, DM1

struct ModelConfig {
  Variant variant = Variant::kDM2;
  int channels = 48;
  int n_conformers = 4;
  int n_heads = 4;
  int dense_depth = 2;        // dilated conv layers per dense block
  int conv_kernel = 31;       // conformer depthwise kernel along the sequence
  int ffn_mult = 4;
  double omega = 0.5;         // forced to 0 for DM2
  double alpha_init = 0.5;    // DM2 skip weight
  double lsig_beta = 2.0;     // learnable-sigmoid ceiling
  StftConfig stft;

  int64_t num_bins() const { return stft.num_bins(); }
  int64_t latent_bins() const { return (num_bins() + 1) / 2; }
  // omega as used by the forward pass (0 for DM2, unused for S1/S2).
  double EffectiveOmega() const;
  void Validate() const;
};

// C=4, one TS-Conformer, F=17 (n_fft 32, hop 8): gradient checks and
// smoke runs.
ModelConfig TinyModelConfig(Variant variant);

void to_json(nlohmann::json &j, const ModelConfig &c);
// Rejects unknown keys and validates.
void from_json(const nlohmann::json &j, ModelConfig &c);
void to_json(nlohmann::json &j, const StftConfig &c);
void from_json(const nlohmann::json &j, StftConfig &c);

// Two-channel feature extractor: 1x1 conv, dense dilated block, then a
// stride-2 conv that halves the frequency axis to ceil(F/2).
class DenseBlockImpl : public torch::nn::Module {
 public:
  DenseBlockImpl(int64_t channels, int depth);
  torch::Tensor forward(torch::Tensor x);

 private:
  std::vector<torch::nn::Sequential> layers_;
};
TORCH_MODULE(DenseBlock);

class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const ModelConfig &cfg);
  // [B, 2, T, F] -> [B, C, T, ceil(F/2)]
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::Sequential conv_in_{nullptr};
  DenseBlock dense_{nullptr};
  torch::nn::Sequential conv_down_{nullptr};
};
TORCH_MODULE(Encoder);

// Pre-norm macaron conformer over [N, L, C] sequences. There is no final
// LayerNorm, so zeroing the output projections leaves the identity.
class ConformerImpl : public torch::nn::Module {
 public:
  explicit ConformerImpl(const ModelConfig &cfg);
  // pad_mask: [N, L] bool, true at padded positions (may be undefined).
  torch::Tensor forward(torch::Tensor x, const torch::Tensor &pad_mask = {});

 private:
  torch::nn::Sequential ff1_{nullptr}, ff2_{nullptr};
  torch::nn::LayerNorm attn_norm_{nullptr};
  torch::nn::MultiheadAttention attn_{nullptr};
  torch::nn::LayerNorm conv_norm_{nullptr};
  torch::nn::Linear conv_pw1_{nullptr};
  torch::nn::Conv1d conv_dw_{nullptr};
  torch::nn::LayerNorm conv_dw_norm_{nullptr};
  torch::nn::Linear conv_pw2_{nullptr};
};
TORCH_MODULE(Conformer);

// Conformer along time, then along frequency, on [B, C, T, F'].
class TsConformerImpl : public torch::nn::Module {
 public:
  explicit TsConformerImpl(const ModelConfig &cfg);
  // frames: [B] valid frame counts (undefined = all valid).
  torch::Tensor forward(torch::Tensor x, const torch::Tensor &frames = {});

 private:
  Conformer time_{nullptr};
  Conformer freq_{nullptr};
};
TORCH_MODULE(TsConformer);

// Dense block, transposed-conv frequency upsampling back to F, then a 1x1
// projection. Produces the pre-activation U [B, T, F] or, for the phase
// decoder, [B, C, T, F] features.
class DecoderBodyImpl : public torch::nn::Module {
 public:
  DecoderBodyImpl(const ModelConfig &cfg, int64_t out_channels);
  torch::Tensor forward(torch::Tensor x);

 private:
  DenseBlock dense_{nullptr};
  torch::nn::Sequential up_{nullptr};
  torch::nn::Conv2d proj_{nullptr};
  int64_t bins_;
};
TORCH_MODULE(DecoderBody);

struct ModelOutput {
  torch::Tensor mag_mask_path;  // [B, T, F], zeros when the path is absent
  torch::Tensor mag_map_path;
  torch::Tensor mag_final;
  torch::Tensor phase;          // (-pi, pi]
  torch::Tensor alpha;          // DM2 only, 0-dim

  torch::Tensor Complex(double compress_exponent) const;
};

struct ForwardOptions {
  bool zero_map_path = false;   // replace ReLU(U) by zeros before fusion
  bool force_unit_mask = false;  // LSigmoid(U) := 1 (bypass)
  bool pass_input_phase = false;  // phase output := input phase
};

// mask_out/map_out fusion. U1/DM1: w*mask + (1-w)*map. DM2: map + a*mask
// (clamped at 0). S1: mask. S2: map + input_mag.
torch::Tensor Fuse(const torch::Tensor &mask_out, const torch::Tensor &map_out,
                   Variant variant, double omega, const torch::Tensor &alpha,
                   const torch::Tensor &input_mag);

class DmNetImpl : public torch::nn::Module {
 public:
  explicit DmNetImpl(const ModelConfig &cfg);

  const ModelConfig &config() const { return cfg_; }

  // mag, phase: [B, T, F] compressed magnitude and phase.
  ModelOutput forward(const torch::Tensor &mag, const torch::Tensor &phase,
                      const torch::Tensor &frames = {},
                      const ForwardOptions &opts = {});

  torch::Tensor Encode(const torch::Tensor &mag, const torch::Tensor &phase);
  torch::Tensor RunConformers(torch::Tensor latent,
                              const torch::Tensor &frames = {});
  // Pre-activation U of the (first) magnitude body.
  torch::Tensor MagnitudeBody(const torch::Tensor &latent);
  torch::Tensor DecodePhase(const torch::Tensor &latent);
  torch::Tensor LSigmoid(const torch::Tensor &u) const;

  bool has_alpha() const { return alpha_.defined(); }
  torch::Tensor alpha() const { return alpha_; }
  torch::Tensor lsig_slope() const { return lsig_slope_; }
  DecoderBody mag_decoder() const { return mag_decoder_; }
  DecoderBody map_decoder() const { return map_decoder_; }

 private:
  ModelConfig cfg_;
  Encoder encoder_{nullptr};
  std::vector<TsConformer> blocks_;
  DecoderBody mag_decoder_{nullptr};  // shared body (U1: masking body)
  DecoderBody map_decoder_{nullptr};  // U1 only
  DecoderBody phase_decoder_{nullptr};
  torch::nn::Conv2d phase_real_{nullptr};
  torch::nn::Conv2d phase_imag_{nullptr};
  torch::Tensor lsig_slope_;  // [F]
  torch::Tensor alpha_;       // DM2 only
};
TORCH_MODULE(DmNet);

// Learnable scalars of a model built from cfg.
int64_t CountParameters(const ModelConfig &cfg);
int64_t CountParameters(torch::nn::Module &module);
// Learnable scalars of one magnitude-decoder body.
int64_t MagnitudeBodyParameters(const ModelConfig &cfg);

// Copies every parameter of `from` whose name and shape exist in `to`;
// returns the number copied.
int64_t CopyParameters(torch::nn::Module &from, torch::nn::Module &to);

// Normalizes the input level, runs the full pipeline and returns a waveform
// of the input's length. Inputs shorter than one window are zero-padded for
// analysis only.
Waveform Restore(DmNet &model, const Waveform &input,
                 const ForwardOptions &opts = {});

}  // namespace dmnet

#endif  // DMNET_MODEL_H_
