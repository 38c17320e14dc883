// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dmnet/error.h"
#include "dmnet/random.h"

namespace dmnet {

namespace {

constexpr double kPi = std::numbers::pi;

double FormantGain(double freq, const double (&formants)[3]) {
  constexpr double kWidth[3] = {90.0, 140.0, 220.0};
  constexpr double kLevel[3] = {1.0, 0.6, 0.35};
  double g = 0.02;
  for (int i = 0; i < 3; ++i) {
    const double d = (freq - formants[i]) / kWidth[i];
    g += kLevel[i] * std::exp(-0.5 * d * d);
  }
  return g;
}

void Normalize(std::vector<double> *x, double target, bool by_rms) {
  double ref = 0.0;
  if (by_rms) {
    for (double v : *x) ref += v * v;
    ref = std::sqrt(ref / static_cast<double>(x->size()));
  } else {
    for (double v : *x) ref = std::max(ref, std::abs(v));
  }
  if (ref > 0.0)
    for (double &v : *x) v *= target / ref;
}

}  // namespace

Waveform SynthesizeSpeechLike(double seconds, uint64_t seed,
                              const std::string &id) {
  DMNET_CHECK(seconds > 0.0, kConfig, "duration must be positive");
  const int64_t n = static_cast<int64_t>(std::llround(seconds * kSampleRate));
  std::vector<double> x(n, 0.0);
  Rng rng(seed);
  const double base_f0 = rng.Uniform(95.0, 210.0);
  int64_t pos = static_cast<int64_t>(rng.Uniform(0.02, 0.08) * kSampleRate);
  while (pos < n) {
    const int64_t len = static_cast<int64_t>(rng.Uniform(0.12, 0.3) * kSampleRate);
    const int64_t end = std::min(n, pos + len);
    const double level = rng.Uniform(0.4, 1.0);
    if (rng.Uniform() < 0.75) {
      // Voiced syllable with a gliding pitch and formant transition.
      const double f0a = base_f0 * rng.Uniform(0.85, 1.15);
      const double f0b = base_f0 * rng.Uniform(0.85, 1.15);
      const double fa[3] = {rng.Uniform(300, 800), rng.Uniform(900, 2300),
                            rng.Uniform(2400, 3400)};
      const double fb[3] = {rng.Uniform(300, 800), rng.Uniform(900, 2300),
                            rng.Uniform(2400, 3400)};
      double phase = 0.0;
      std::vector<double> harmonic_phase(128);
      for (auto &p : harmonic_phase) p = rng.Uniform(0.0, 2.0 * kPi);
      for (int64_t i = pos; i < end; ++i) {
        const double u = static_cast<double>(i - pos) / static_cast<double>(end - pos);
        const double f0 = f0a + (f0b - f0a) * u;
        phase += 2.0 * kPi * f0 / kSampleRate;
        const double formants[3] = {fa[0] + (fb[0] - fa[0]) * u,
                                    fa[1] + (fb[1] - fa[1]) * u,
                                    fa[2] + (fb[2] - fa[2]) * u};
        double s = 0.0;
        for (int k = 1; k < 128 && k * f0 < 7900.0; ++k) {
          const double amp = FormantGain(k * f0, formants) / std::pow(k, 0.5);
          s += amp * std::sin(k * phase + harmonic_phase[k]);
        }
        const double env = std::sin(kPi * u);
        x[i] += level * env * s;
      }
    } else {
      // Fricative: high-frequency-weighted noise (first difference of white).
      double prev = 0.0;
      for (int64_t i = pos; i < end; ++i) {
        const double u = static_cast<double>(i - pos) / static_cast<double>(end - pos);
        const double w = rng.Normal();
        x[i] += level * 0.6 * std::sin(kPi * u) * (w - 0.5 * prev);
        prev = w;
      }
    }
    pos = end + static_cast<int64_t>(rng.Uniform(0.03, 0.15) * kSampleRate);
  }
  Normalize(&x, 0.5, false);
  return Waveform(std::move(x), id);
}

NoiseColor ParseNoiseColor(const std::string &name) {
  if (name == "white") return NoiseColor::kWhite;
  if (name == "pink") return NoiseColor::kPink;
  if (name == "brown") return NoiseColor::kBrown;
  if (name == "babble") return NoiseColor::kBabble;
  Throw(ErrorKind::kConfig, "unknown noise color '" + name + "'");
}

std::string NoiseColorName(NoiseColor color) {
  switch (color) {
    case NoiseColor::kWhite: return "white";
    case NoiseColor::kPink: return "pink";
    case NoiseColor::kBrown: return "brown";
    case NoiseColor::kBabble: return "babble";
  }
  return "unknown";
}

Waveform SynthesizeNoise(double seconds, NoiseColor color, uint64_t seed,
                         const std::string &id) {
  DMNET_CHECK(seconds > 0.0, kConfig, "duration must be positive");
  const int64_t n = static_cast<int64_t>(std::llround(seconds * kSampleRate));
  std::vector<double> x(n, 0.0);
  Rng rng(seed);
  switch (color) {
    case NoiseColor::kWhite:
      for (auto &v : x) v = rng.Normal();
      break;
    case NoiseColor::kPink: {
      // Paul Kellet's refined pink filter.
      double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
      for (auto &v : x) {
        const double w = rng.Normal();
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
        b6 = w * 0.115926;
      }
      break;
    }
    case NoiseColor::kBrown: {
      double acc = 0.0;
      for (auto &v : x) {
        acc = 0.995 * acc + rng.Normal();
        v = acc;
      }
      break;
    }
    case NoiseColor::kBabble:
      for (int voice = 0; voice < 6; ++voice) {
        auto s = SynthesizeSpeechLike(seconds, MixSeed(seed, voice));
        for (int64_t i = 0; i < n; ++i) x[i] += s.samples[i];
      }
      break;
  }
  Normalize(&x, 0.1, true);
  return Waveform(std::move(x), id);
}

}  // namespace dmnet
