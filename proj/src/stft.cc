// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/stft.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dmnet/error.h"

namespace dmnet {

namespace F = torch::nn::functional;

std::string WindowKindName(WindowKind kind) {
  switch (kind) {
    case WindowKind::kHann: return "hann";
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kRectangular: return "rectangular";
  }
  return "unknown";
}

WindowKind ParseWindowKind(const std::string &name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "hamming") return WindowKind::kHamming;
  if (name == "rectangular" || name == "rect") return WindowKind::kRectangular;
  Throw(ErrorKind::kConfig, "unknown window kind '" + name + "'");
}

namespace {

// Periodic windows of length n, zero-padded and centered in n_fft.
std::vector<double> MakeWindow(WindowKind kind, int win_length, int n_fft) {
  std::vector<double> w(n_fft, 0.0);
  const int offset = (n_fft - win_length) / 2;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int n = 0; n < win_length; ++n) {
    double v = 1.0;
    if (kind == WindowKind::kHann)
      v = 0.5 - 0.5 * std::cos(two_pi * n / win_length);
    else if (kind == WindowKind::kHamming)
      v = 0.54 - 0.46 * std::cos(two_pi * n / win_length);
    w[offset + n] = v;
  }
  return w;
}

}  // namespace

void StftConfig::Validate() const {
  DMNET_CHECK(n_fft >= 2 && n_fft % 2 == 0, kConfig,
              "n_fft must be even and >= 2, got " + std::to_string(n_fft));
  DMNET_CHECK(hop >= 1 && hop <= win_length && win_length <= n_fft, kConfig,
              "need 1 <= hop <= win_length <= n_fft, got hop=" +
                  std::to_string(hop) + " win_length=" +
                  std::to_string(win_length) + " n_fft=" +
                  std::to_string(n_fft));
  DMNET_CHECK(compress_exponent > 0.0 && compress_exponent <= 1.0, kConfig,
              "compress_exponent must lie in (0, 1]");
  const auto w = MakeWindow(window, win_length, n_fft);
  std::vector<double> overlap(hop, 0.0);
  for (int m = 0; m < n_fft; ++m) overlap[m % hop] += w[m];
  const auto [lo, hi] = std::minmax_element(overlap.begin(), overlap.end());
  DMNET_CHECK(*lo > 0.0 && *hi - *lo <= 1e-9 * *hi, kConfig,
              WindowKindName(window) + " window of length " +
                  std::to_string(win_length) + " with hop " +
                  std::to_string(hop) +
                  " does not satisfy constant overlap-add");
}

torch::Tensor SpectroTriple::Complex(double compress_exponent) const {
  return torch::polar(DecompressMagnitude(magnitude, compress_exponent), phase);
}

Stft::Stft(const StftConfig &config) : config_(config) {
  config_.Validate();
  window_ = MakeWindow(config_.window, config_.win_length, config_.n_fft);
}

int64_t Stft::NumFrames(int64_t length) const {
  return 1 + (length + config_.hop - 1) / config_.hop;
}

torch::Tensor Stft::Window(torch::Dtype dtype) const {
  return torch::tensor(window_, torch::kFloat64).to(dtype);
}

torch::Tensor Stft::Forward(const torch::Tensor &wav) const {
  const int64_t length = wav.size(-1);
  DMNET_CHECK(length >= config_.win_length, kDimension,
              "waveform of " + std::to_string(length) +
                  " samples is shorter than one window (" +
                  std::to_string(config_.win_length) + ")");
  const int64_t n_fft = config_.n_fft;
  const int64_t frames = NumFrames(length);
  const int64_t padded = (frames - 1) * config_.hop + n_fft;
  const int64_t left = n_fft / 2;
  auto x = torch::constant_pad_nd(wav, {left, padded - left - length});
  auto framed = x.unfold(-1, n_fft, config_.hop) * Window(wav.scalar_type());
  return torch::fft::rfft(framed, n_fft, -1);
}

torch::Tensor Stft::Inverse(const torch::Tensor &spec, int64_t length) const {
  DMNET_CHECK(spec.dim() >= 2 && spec.size(-1) == config_.num_bins(),
              kDimension,
              "spectrogram has " + std::to_string(spec.size(-1)) +
                  " bins, config expects " +
                  std::to_string(config_.num_bins()));
  const int64_t n_fft = config_.n_fft;
  const int64_t frames = spec.size(-2);
  DMNET_CHECK(length >= 0 && length <= frames * config_.hop + config_.win_length,
              kDimension,
              "requested length " + std::to_string(length) +
                  " exceeds what " + std::to_string(frames) +
                  " frames can cover");
  const auto lead = spec.sizes().slice(0, spec.dim() - 2).vec();
  auto flat = spec.reshape({-1, frames, spec.size(-1)});
  const auto real_type = c10::toRealValueType(spec.scalar_type());
  const auto window = Window(real_type);

  auto frames_t = torch::fft::irfft(flat, n_fft, -1) * window;  // [B, T, n]
  const int64_t padded = (frames - 1) * config_.hop + n_fft;
  auto fold = F::FoldFuncOptions({1, padded}, {1, n_fft})
                  .stride({1, config_.hop});
  auto signal = F::fold(frames_t.transpose(1, 2), fold).reshape({-1, padded});
  auto wsq = (window * window).reshape({1, n_fft, 1}).expand({1, n_fft, frames});
  auto wsum = F::fold(wsq, fold).reshape({padded});
  wsum = torch::where(wsum > 1e-11, wsum, torch::ones_like(wsum));
  signal = signal / wsum;

  const int64_t left = n_fft / 2;
  const int64_t avail = std::min<int64_t>(length, padded - left);
  auto out = signal.narrow(1, left, avail);
  if (avail < length) out = torch::constant_pad_nd(out, {0, length - avail});
  auto shape = lead;
  shape.push_back(length);
  return out.reshape(shape);
}

SpectroTriple Stft::Analyze(const torch::Tensor &wav) const {
  auto spec = Forward(wav);
  return {CompressMagnitude(spec.abs(), config_.compress_exponent),
          PrincipalAngle(spec)};
}

torch::Tensor Stft::Synthesize(const SpectroTriple &triple,
                               int64_t length) const {
  DMNET_CHECK(triple.magnitude.sizes() == triple.phase.sizes(), kDimension,
              "magnitude and phase shapes differ");
  return Inverse(triple.Complex(config_.compress_exponent), length);
}

SpectroTriple Stft::Analyze(const Waveform &wav, torch::Dtype dtype) const {
  DMNET_CHECK(wav.sample_rate == kSampleRate, kData,
              "expected 16 kHz input, got " + std::to_string(wav.sample_rate));
  return Analyze(ToTensor(wav, dtype));
}

Waveform Stft::SynthesizeWaveform(const SpectroTriple &triple,
                                  int64_t length) const {
  return ToWaveform(Synthesize(triple, length));
}

torch::Tensor CompressMagnitude(const torch::Tensor &linear_mag,
                                double exponent) {
  DMNET_CHECK(exponent > 0.0 && exponent <= 1.0, kDomain,
              "compression exponent must lie in (0, 1]");
  DMNET_CHECK(linear_mag.numel() == 0 || linear_mag.min().item<double>() >= 0.0,
              kDomain, "cannot compress negative magnitudes");
  if (exponent == 1.0) return linear_mag;
  return linear_mag.pow(exponent);
}

torch::Tensor DecompressMagnitude(const torch::Tensor &compressed_mag,
                                  double exponent) {
  DMNET_CHECK(exponent > 0.0 && exponent <= 1.0, kDomain,
              "compression exponent must lie in (0, 1]");
  if (exponent == 1.0) return compressed_mag;
  return compressed_mag.pow(1.0 / exponent);
}

double WrapPhase(double theta) {
  DMNET_CHECK(std::isfinite(theta), kDomain, "cannot wrap a non-finite phase");
  constexpr double kPi = std::numbers::pi;
  const double r = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  // theta = (2k+1)pi lands on -pi up to the rounding of theta itself.
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, std::abs(theta));
  return r <= -kPi + tol ? kPi : r;
}

torch::Tensor WrapPhase(const torch::Tensor &theta) {
  constexpr double kPi = std::numbers::pi;
  auto r = theta - 2.0 * kPi * torch::round(theta / (2.0 * kPi));
  return torch::where(r <= -kPi, r + 2.0 * kPi, r);
}

torch::Tensor PrincipalAngle(const torch::Tensor &complex) {
  constexpr double kPi = std::numbers::pi;
  auto re = torch::real(complex);
  auto im = torch::imag(complex);
  auto angle = torch::atan2(im, re);
  angle = torch::where(angle <= -kPi, angle + 2.0 * kPi, angle);
  return torch::where((re == 0) & (im == 0), torch::zeros_like(angle), angle);
}

torch::Tensor ToTensor(const Waveform &wav, torch::Dtype dtype) {
  return torch::tensor(wav.samples, torch::kFloat64).to(dtype);
}

Waveform ToWaveform(const torch::Tensor &samples, const std::string &id) {
  auto t = samples.detach().to(torch::kFloat64).contiguous().reshape({-1});
  const double *p = t.data_ptr<double>();
  return Waveform(std::vector<double>(p, p + t.numel()), id);
}

}  // namespace dmnet
