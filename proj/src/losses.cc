// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/losses.h"

#include <algorithm>
#include <numbers>

#include "dmnet/error.h"

namespace dmnet {

using nlohmann::json;
using torch::Tensor;

void LossWeights::Validate() const {
  DMNET_CHECK(mag > 0.0, kConfig, "loss weight mag must be > 0");
  DMNET_CHECK(phase >= 0.0 && complex >= 0.0 && time >= 0.0 && consistency >= 0.0,
              kConfig, "loss weights must be >= 0");
}

void to_json(json &j, const LossWeights &w) {
  j = json{{"mag", w.mag},
           {"phase", w.phase},
           {"complex", w.complex},
           {"time", w.time},
           {"consistency", w.consistency}};
}

void from_json(const json &j, LossWeights &w) {
  DMNET_CHECK(j.is_object(), kConfig, "loss_weights must be an object");
  for (const auto &[key, _] : j.items()) {
    DMNET_CHECK(key == "mag" || key == "phase" || key == "complex" ||
                    key == "time" || key == "consistency",
                kConfig, "unknown loss weight '" + key + "'");
  }
  LossWeights d;
  d.mag = j.value("mag", d.mag);
  d.phase = j.value("phase", d.phase);
  d.complex = j.value("complex", d.complex);
  d.time = j.value("time", d.time);
  d.consistency = j.value("consistency", d.consistency);
  d.Validate();
  w = d;
}

namespace {

void CheckShapes(const Tensor &a, const Tensor &b, const char *what) {
  DMNET_CHECK(a.sizes() == b.sizes(), kDimension,
              std::string(what) + ": shape mismatch");
}

}  // namespace

Tensor LossMagnitude(const Tensor &pred, const Tensor &target) {
  CheckShapes(pred, target, "magnitude loss");
  return (pred - target).square().mean();
}

Tensor AntiWrap(const Tensor &x) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  return (x - kTwoPi * torch::round(x / kTwoPi)).abs();
}

PhaseLoss LossPhaseAntiWrap(const Tensor &pred, const Tensor &target) {
  CheckShapes(pred, target, "phase loss");
  PhaseLoss l;
  const auto d = pred - target;
  l.instantaneous = AntiWrap(d).mean();
  l.group_delay = AntiWrap(torch::diff(pred, 1, -1) - torch::diff(target, 1, -1)).mean();
  l.inst_freq = AntiWrap(torch::diff(pred, 1, -2) - torch::diff(target, 1, -2)).mean();
  l.total = l.instantaneous + l.group_delay + l.inst_freq;
  return l;
}

Tensor LossComplex(const Tensor &pred, const Tensor &target) {
  CheckShapes(pred, target, "complex loss");
  const auto d = pred - target;
  return torch::real(d).square().mean() + torch::imag(d).square().mean();
}

Tensor LossTime(const Tensor &pred, const Tensor &target) {
  CheckShapes(pred, target, "time loss");
  return (pred - target).abs().mean();
}

Tensor LossConsistency(const Tensor &pred_complex, const Stft &stft, int64_t length) {
  auto again = stft.Forward(stft.Inverse(pred_complex, length));
  return LossComplex(pred_complex, again);
}

Target MakeTarget(const Stft &stft, const Tensor &clean_wav) {
  Target t;
  t.wav = clean_wav;
  t.complex = stft.Forward(clean_wav);
  t.triple = {CompressMagnitude(t.complex.abs(), stft.config().compress_exponent),
              PrincipalAngle(t.complex)};
  return t;
}

LossBreakdown TotalLoss(const ModelOutput &out, const Target &target,
                        const Stft &stft, const LossWeights &w) {
  w.Validate();
  LossBreakdown b;
  const double c = stft.config().compress_exponent;
  const int64_t length = target.wav.size(-1);
  b.mag = LossMagnitude(out.mag_final, target.triple.magnitude);
  b.total = w.mag * b.mag;
  if (w.phase > 0.0) {
    b.phase = LossPhaseAntiWrap(out.phase, target.triple.phase).total;
    b.total = b.total + w.phase * b.phase;
  }
  Tensor pred_complex;
  if (w.complex > 0.0 || w.time > 0.0 || w.consistency > 0.0)
    pred_complex = out.Complex(c);
  if (w.complex > 0.0) {
    b.complex = LossComplex(pred_complex, target.complex);
    b.total = b.total + w.complex * b.complex;
  }
  if (w.time > 0.0) {
    b.time = LossTime(stft.Inverse(pred_complex, length), target.wav);
    b.total = b.total + w.time * b.time;
  }
  if (w.consistency > 0.0) {
    b.consistency = LossConsistency(pred_complex, stft, length);
    b.total = b.total + w.consistency * b.consistency;
  }
  return b;
}

}  // namespace dmnet
