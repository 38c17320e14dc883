// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_LEVEL_H_
#define DMNET_LEVEL_H_

#include <span>

namespace dmnet {

// 20 ms frames at 16 kHz.
inline constexpr int kLevelFrame = 320;
// Frames more than this far below the loudest frame are treated as silence.
inline constexpr double kActiveRangeDb = 40.0;

// Mean power over the active frames of x (frames within kActiveRangeDb of
// the loudest frame). Throws an energy error for an all-zero signal.
double ActiveSpeechPower(std::span<const double> x);

// Mean power over all samples.
double MeanPower(std::span<const double> x);

}  // namespace dmnet

#endif  // DMNET_LEVEL_H_
