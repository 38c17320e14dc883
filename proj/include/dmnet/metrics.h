// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_METRICS_H_
#define DMNET_METRICS_H_

#include <span>

#include "dmnet/wav.h"

namespace dmnet {

// SI-SDR values are reported up to this cap; a perfect estimate reports it.
inline constexpr double kSiSdrCapDb = 60.0;

// Log-spectral distance in dB between two equal-length signals:
//   mean_t sqrt(mean_f (10 log10 P_ref - 10 log10 P_est)^2),
// P = |X|^2 + 1e-10 on a Hann 2048/512 STFT. Length mismatch is a dimension
// error; an all-zero reference is an energy error.
double Lsd(const Waveform &ref, const Waveform &est);
inline constexpr int kLsdFft = 2048;
inline constexpr int kLsdHop = 512;
inline constexpr double kLsdFloor = 1e-10;

// Classical short-time objective intelligibility (15 third-octave bands from
// 150 Hz, 384 ms segments, -15 dB clipping) computed at 10 kHz after
// resampling. Requires at least 30 analysis frames after silent-frame
// removal, otherwise throws a dimension error.
double Stoi(const Waveform &ref, const Waveform &est);

// Scale-invariant SDR in dB on zero-mean signals, capped at kSiSdrCapDb.
double SiSdr(const Waveform &ref, const Waveform &est);

// Active-speech-level SNR of `mixture` against `clean`: the residual
// mixture - clean is the noise. +infinity when the residual is zero.
double MeasuredSnr(std::span<const double> clean,
                   std::span<const double> mixture);

// Reverberation time from Schroeder backward integration: a line fit to the
// energy decay curve between -5 and -35 dB, extrapolated to -60 dB. Falls
// back to -5..-25 dB when the curve never reaches -35 dB.
double Rt60Schroeder(std::span<const double> rir);

}  // namespace dmnet

#endif  // DMNET_METRICS_H_
