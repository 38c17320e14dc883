// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_RUNTIME_H_
#define DMNET_RUNTIME_H_

#include <torch/torch.h>

namespace dmnet {

// Name of the environment switch for deterministic float mode.
inline constexpr const char *kDeterministicEnv = "DMNET_DETERMINISTIC";

// True when DMNET_DETERMINISTIC is set to anything but "", "0" or "false".
bool DeterministicMode();

// float64 in deterministic mode, float32 otherwise.
torch::Dtype ComputeDtype();

// Pins torch to one intra-op thread in deterministic mode.
void ApplyRuntimeSettings();

}  // namespace dmnet

#endif  // DMNET_RUNTIME_H_
