// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_STFT_H_
#define DMNET_STFT_H_

#include <torch/torch.h>

#include <string>

#include "dmnet/wav.h"

namespace dmnet {

enum class WindowKind { kHann, kHamming, kRectangular };

std::string WindowKindName(WindowKind kind);
WindowKind ParseWindowKind(const std::string &name);

struct StftConfig {
  int n_fft = 400;
  int hop = 100;
  int win_length = 400;
  WindowKind window = WindowKind::kHann;
  // Magnitudes are carried as |X|^compress_exponent.
  double compress_exponent = 0.3;

  int num_bins() const { return n_fft / 2 + 1; }

  // Throws a config error unless hop <= win_length <= n_fft, n_fft is even,
  // 0 < compress_exponent <= 1 and the window/hop pair overlap-adds to a
  // constant.
  void Validate() const;
};

// Compressed magnitude and wrapped phase of one signal, both [..., T, F].
struct SpectroTriple {
  torch::Tensor magnitude;
  torch::Tensor phase;

  int64_t frames() const { return magnitude.size(-2); }
  int64_t bins() const { return magnitude.size(-1); }

  // decompress(magnitude) * exp(i * phase).
  torch::Tensor Complex(double compress_exponent) const;
};

// Centered STFT with zero padding of n_fft/2 on the left. A signal of L
// samples has 1 + ceil(L / hop) frames, so every input sample is covered by
// the window support of at least one frame. Synthesis is weighted overlap-add
// normalized by the summed squared window, which makes istft(stft(x)) == x.
// All tensor entry points are differentiable and batch over leading dims.
class Stft {
 public:
  explicit Stft(const StftConfig &config);

  const StftConfig &config() const { return config_; }
  int64_t NumFrames(int64_t length) const;

  // Length-n_fft analysis window (win_length window centered in n_fft).
  torch::Tensor Window(torch::Dtype dtype) const;

  // [..., L] real -> [..., T, F] complex, uncompressed.
  torch::Tensor Forward(const torch::Tensor &wav) const;
  // [..., T, F] complex -> [..., length] real.
  torch::Tensor Inverse(const torch::Tensor &spec, int64_t length) const;

  SpectroTriple Analyze(const torch::Tensor &wav) const;
  torch::Tensor Synthesize(const SpectroTriple &triple, int64_t length) const;

  SpectroTriple Analyze(const Waveform &wav,
                        torch::Dtype dtype = torch::kFloat64) const;
  Waveform SynthesizeWaveform(const SpectroTriple &triple,
                              int64_t length) const;

 private:
  StftConfig config_;
  std::vector<double> window_;  // n_fft samples
};

torch::Tensor CompressMagnitude(const torch::Tensor &linear_mag,
                                double exponent);
torch::Tensor DecompressMagnitude(const torch::Tensor &compressed_mag,
                                  double exponent);

// Principal value in (-pi, pi]. Non-finite input is a domain error.
double WrapPhase(double theta);
torch::Tensor WrapPhase(const torch::Tensor &theta);

// Angle of a complex tensor in (-pi, pi], 0 where the magnitude is 0.
torch::Tensor PrincipalAngle(const torch::Tensor &complex);

torch::Tensor ToTensor(const Waveform &wav,
                       torch::Dtype dtype = torch::kFloat64);
Waveform ToWaveform(const torch::Tensor &samples, const std::string &id = {});

}  // namespace dmnet

#endif  // DMNET_STFT_H_
