// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_PLOT_H_
#define DMNET_PLOT_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dmnet/wav.h"

namespace dmnet {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // row-major, row 0 at the top

  std::array<uint8_t, 3> At(int x, int y) const;
};

struct PlotOptions {
  double range_db = 80.0;  // colors span [-range_db, 0] dB re the maximum
  int gap = 8;             // white columns between panels
};

// Power spectrogram in dB, [frames][bins], from the LSD analysis STFT
// (2048-point Hann, hop 512, uncompressed, floored).
std::vector<std::vector<double>> SpectrogramDb(const Waveform &wav);

// Image row holding STFT bin `bin` (low frequencies at the bottom).
int BinRow(int bin);
// Nearest bin of a frequency in Hz.
int FrequencyBin(double hz);

// One panel per waveform, left to right, sharing a color scale referenced
// to the loudest bin over all panels. The colormap has monotonic luminance,
// so the figure survives grayscale printing.
Image RenderSpectrograms(const std::vector<Waveform> &panels,
                         const PlotOptions &options = {});

// Luminance-monotonic colormap, t in [0, 1].
std::array<uint8_t, 3> ColorMap(double t);

void WritePng(const std::string &path, const Image &image);

}  // namespace dmnet

#endif  // DMNET_PLOT_H_
