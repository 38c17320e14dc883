// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_DISTORTION_H_
#define DMNET_DISTORTION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dmnet/filter.h"
#include "dmnet/random.h"
#include "dmnet/room.h"
#include "dmnet/wav.h"
#include "json.hpp"

namespace dmnet {

// Parameters of one degraded utterance. The trailing block holds values
// realized while degrading; they are written back into the returned spec so
// the manifest line alone reproduces the output.
struct DistortionSpec {
  double snr_db = 10.0;
  Vec3 room_dims{6.0, 5.0, 3.0};
  double rt60_s = 0.5;
  Vec3 src_pos{2.0, 2.0, 1.5};
  Vec3 mic_pos{4.0, 3.0, 1.5};
  FilterFamily filter_family = FilterFamily::kButterworth;
  int filter_order = 8;
  double cutoff_hz = 3000.0;
  uint64_t rng_seed = 0;

  bool reverb = true;
  bool noise = true;
  bool lowpass = true;
  bool noise_after_filter = false;

  double absorption = -1.0;  // < 0: calibrate from rt60_s
  int64_t noise_offset = -1;  // < 0: draw from the utterance stream
  double noise_gain = 0.0;
  double rir_gain = 1.0;
  double rt60_measured_s = 0.0;

  ShoeboxRoom Room() const { return {room_dims, src_pos, mic_pos}; }
  LowpassDesign Filter() const;
};

void to_json(nlohmann::json &j, const DistortionSpec &s);
void from_json(const nlohmann::json &j, DistortionSpec &s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Sampling ranges for a corpus (the reference recipe by default).
struct DistortionRanges {
  Range snr_db{0.0, 20.0};
  Range rt60_s{0.3, 0.9};
  Range length_m{5.0, 10.0};
  Range width_m{5.0, 10.0};
  Range height_m{2.0, 6.0};
  Range cutoff_hz{2000.0, 4000.0};
  std::vector<FilterFamily> families{
      FilterFamily::kButterworth, FilterFamily::kBessel,
      FilterFamily::kChebyshev1, FilterFamily::kElliptic};
  double clearance_m = 0.3;
  double min_distance_m = 1.0;  // source-microphone
  bool reverb = true;
  bool noise = true;
  bool lowpass = true;
  bool noise_after_filter = false;

  void Validate() const;
};

void to_json(nlohmann::json &j, const DistortionRanges &r);
void from_json(const nlohmann::json &j, DistortionRanges &r);

DistortionSpec SampleDistortion(const DistortionRanges &ranges, Rng *rng);

// Checks the recipe invariants (ranges, clearance); kConfig / kGeometry.
void ValidateSpec(const DistortionSpec &spec);

struct Rir {
  std::vector<double> taps;
  double rt60_target_s = 0.0;
  double rt60_measured_s = 0.0;
  double absorption = 0.0;
  int direct_delay = 0;
};

// Image-source RIR for the spec's room. Absorption comes from spec.absorption
// when set, otherwise it is calibrated against spec.rt60_s.
Rir GenerateRir(const DistortionSpec &spec);

// Same geometry with a fixed absorption (0.99 is the dry clean reference).
Rir GenerateFixedRir(const DistortionSpec &spec, double absorption);

struct Convolved {
  Waveform output;
  double gain = 1.0;  // applied peak normalization, 1 if none
};

// Full convolution trimmed to len(x); scaled down only if the peak exceeds 1.
Convolved ApplyRir(const Waveform &x, const std::vector<double> &taps);

// Linear convolution trimmed to x.size() (FFT based).
std::vector<double> Convolve(const std::vector<double> &x,
                             const std::vector<double> &h);

struct Mixture {
  Waveform mixture;
  double noise_gain = 0.0;
  int64_t noise_offset = 0;
};

// clean + g * noise[offset : offset + len(clean)], g set so that the
// active-speech-level SNR equals snr_db.
Mixture MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db,
                 int64_t offset);
Mixture MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db,
                 Rng *rng);

// Intermediate signals of one degradation, consumed by verification.
struct DegradeTrace {
  std::vector<double> speech;         // speech reference of the SNR
  std::vector<double> mixture;        // speech + scaled noise
  std::vector<double> filter_input;   // signal entering the low-pass
  std::vector<double> filter_output;
  std::vector<double> rir;            // empty when reverb is disabled
};

struct DegradeOptions {
  // Test hook: realized SNR is requested - snr_error_db.
  double snr_error_db = 0.0;
};

struct Degraded {
  Waveform degraded;
  DistortionSpec spec;  // spec_out with realized values
  DegradeTrace trace;
};

// Reverberate, add noise, low-pass (or low-pass before noise when
// spec.noise_after_filter). Stochastic choices come from rng, or from a
// generator seeded with spec.rng_seed when rng is null.
Degraded Degrade(const Waveform &clean, const Waveform &noise,
                 const DistortionSpec &spec, Rng *rng = nullptr,
                 const DegradeOptions &options = {});

struct VerifyTolerance {
  double snr_db = 0.1;
  double rt60_rel = 0.2;
  double bandwidth_rel = 0.1;
};

struct VerificationReport {
  double measured_snr_db = 0.0;  // +inf when no noise was added
  bool snr_ok = true;
  bool has_rt60 = false;
  double rt60_s = 0.0;
  bool rt60_ok = true;
  double bandwidth_hz = 0.0;  // kSampleRate / 2 when no -3 dB crossing
  bool bandwidth_ok = true;

  bool passed() const { return snr_ok && rt60_ok && bandwidth_ok; }
  std::string Failures() const;
};

void to_json(nlohmann::json &j, const VerificationReport &r);

VerificationReport VerifyDegradation(const DegradeTrace &trace,
                                     const DistortionSpec &spec,
                                     const VerifyTolerance &tol = {});

// -3 dB point of |Pxy / Pxx| (Welch, Hann 1024 / 256).
double EstimateBandwidth(const std::vector<double> &input,
                         const std::vector<double> &output);

}  // namespace dmnet

#endif  // DMNET_DISTORTION_H_
