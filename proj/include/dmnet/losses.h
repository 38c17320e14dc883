// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_LOSSES_H_
#define DMNET_LOSSES_H_

#include <torch/torch.h>

#include "dmnet/model.h"
#include "dmnet/stft.h"
#include "json.hpp"

namespace dmnet {

struct LossWeights {
  double mag = 0.9;
  double phase = 0.3;
  double complex = 0.1;
  double time = 0.2;
  double consistency = 0.1;

  // All >= 0 and mag > 0.
  void Validate() const;
};

void to_json(nlohmann::json &j, const LossWeights &w);
void from_json(const nlohmann::json &j, LossWeights &w);

// Mean squared error over all elements (compressed magnitudes).
torch::Tensor LossMagnitude(const torch::Tensor &pred, const torch::Tensor &target);

// a(x) = |x - 2*pi*round(x / 2*pi)|, in [0, pi].
torch::Tensor AntiWrap(const torch::Tensor &x);

struct PhaseLoss {
  torch::Tensor instantaneous;  // mean a(p - t)
  torch::Tensor group_delay;    // differences along frequency
  torch::Tensor inst_freq;      // differences along time
  torch::Tensor total;
};

// pred, target: [..., T, F].
PhaseLoss LossPhaseAntiWrap(const torch::Tensor &pred, const torch::Tensor &target);

// MSE of the real parts plus MSE of the imaginary parts.
torch::Tensor LossComplex(const torch::Tensor &pred, const torch::Tensor &target);

// Mean absolute difference of waveforms.
torch::Tensor LossTime(const torch::Tensor &pred, const torch::Tensor &target);

// Complex MSE between a spectrogram and its re-analysis stft(istft(.)).
torch::Tensor LossConsistency(const torch::Tensor &pred_complex, const Stft &stft,
                              int64_t length);

struct LossBreakdown {
  torch::Tensor total;
  torch::Tensor mag, phase, complex, time, consistency;  // undefined if weight 0
};

// Training target of one batch: clean waveform [B, L] and its analysis.
struct Target {
  torch::Tensor wav;
  SpectroTriple triple;
  torch::Tensor complex;  // uncompressed
};

Target MakeTarget(const Stft &stft, const torch::Tensor &clean_wav);

// Weighted sum; terms with weight 0 are not computed, so they contribute no
// gradient at all.
LossBreakdown TotalLoss(const ModelOutput &out, const Target &target,
                        const Stft &stft, const LossWeights &weights);

}  // namespace dmnet

#endif  // DMNET_LOSSES_H_
