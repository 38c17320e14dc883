// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_SYNTH_H_
#define DMNET_SYNTH_H_

#include <cstdint>
#include <string>

#include "dmnet/wav.h"

namespace dmnet {

// Deterministic speech-like test material: voiced syllables (harmonic
// series up to Nyquist under three moving formants), unvoiced fricative
// bursts with energy up to 8 kHz, and pauses. Peak amplitude 0.5.
Waveform SynthesizeSpeechLike(double seconds, uint64_t seed,
                              const std::string &id = {});

enum class NoiseColor { kWhite, kPink, kBrown, kBabble };

NoiseColor ParseNoiseColor(const std::string &name);
std::string NoiseColorName(NoiseColor color);

// Stationary noise (babble is a sum of speech-like voices). RMS 0.1.
Waveform SynthesizeNoise(double seconds, NoiseColor color, uint64_t seed,
                         const std::string &id = {});

}  // namespace dmnet

#endif  // DMNET_SYNTH_H_
