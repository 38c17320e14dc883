// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_WAV_H_
#define DMNET_WAV_H_

#include <cstdint>
#include <string>
#include <vector>

namespace dmnet {

// Every pipeline stage runs at this rate; nothing is resampled.
inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
  std::string id;

  Waveform() = default;
  explicit Waveform(std::vector<double> s, std::string name = {})
      : samples(std::move(s)), id(std::move(name)) {}

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a mono 16 kHz RIFF/WAVE file (PCM16 or IEEE float32). Any other rate,
// channel count or encoding is rejected with a data error.
Waveform ReadWav(const std::string &path);

// Writes mono float32 at 16 kHz.
void WriteWav(const std::string &path, const Waveform &wav);

// Rounds every sample through float32, i.e. the values a WriteWav/ReadWav
// round trip would produce.
void QuantizeToFloat(Waveform *wav);

}  // namespace dmnet

#endif  // DMNET_WAV_H_
