// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/level.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dmnet/error.h"

namespace dmnet {

double ActiveSpeechPower(std::span<const double> x) {
  DMNET_CHECK(!x.empty(), kEnergy, "empty signal has no speech level");
  struct Frame { double energy; size_t count; };
  std::vector<Frame> frames;
  for (size_t b = 0; b < x.size(); b += kLevelFrame) {
    const size_t e = std::min(x.size(), b + kLevelFrame);
    double acc = 0.0;
    for (size_t i = b; i < e; ++i) acc += x[i] * x[i];
    frames.push_back({acc, e - b});
  }
  double peak = 0.0;
  for (const auto &f : frames)
    peak = std::max(peak, f.energy / static_cast<double>(f.count));
  DMNET_CHECK(peak > 0.0, kEnergy, "signal is silent");
  const double floor = peak * std::pow(10.0, -kActiveRangeDb / 10.0);
  double energy = 0.0;
  size_t count = 0;
  for (const auto &f : frames) {
    if (f.energy / static_cast<double>(f.count) >= floor) {
      energy += f.energy;
      count += f.count;
    }
  }
  return energy / static_cast<double>(count);
}

double MeanPower(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace dmnet
