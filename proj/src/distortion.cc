// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/distortion.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <torch/torch.h>

#include "dmnet/error.h"
#include "dmnet/level.h"
#include "dmnet/metrics.h"

namespace dmnet {

using nlohmann::json;

LowpassDesign DistortionSpec::Filter() const {
  LowpassDesign d;
  d.family = filter_family;
  d.order = filter_order;
  d.cutoff_hz = cutoff_hz;
  return d;
}

void to_json(json &j, const DistortionSpec &s) {
  j = json{{"snr_db", s.snr_db},
           {"room_dims", s.room_dims},
           {"rt60_s", s.rt60_s},
           {"src_pos", s.src_pos},
           {"mic_pos", s.mic_pos},
           {"filter_family", FilterFamilyName(s.filter_family)},
           {"filter_order", s.filter_order},
           {"cutoff_hz", s.cutoff_hz},
           {"rng_seed", s.rng_seed},
           {"reverb", s.reverb},
           {"noise", s.noise},
           {"lowpass", s.lowpass},
           {"noise_after_filter", s.noise_after_filter},
           {"absorption", s.absorption},
           {"noise_offset", s.noise_offset},
           {"noise_gain", s.noise_gain},
           {"rir_gain", s.rir_gain},
           {"rt60_measured_s", s.rt60_measured_s}};
}

void from_json(const json &j, DistortionSpec &s) {
  DistortionSpec d;
  d.snr_db = j.value("snr_db", d.snr_db);
  d.room_dims = j.value("room_dims", d.room_dims);
  d.rt60_s = j.value("rt60_s", d.rt60_s);
  d.src_pos = j.value("src_pos", d.src_pos);
  d.mic_pos = j.value("mic_pos", d.mic_pos);
  if (j.contains("filter_family"))
    d.filter_family = ParseFilterFamily(j.at("filter_family").get<std::string>());
  d.filter_order = j.value("filter_order", DefaultFilterOrder(d.filter_family));
  d.cutoff_hz = j.value("cutoff_hz", d.cutoff_hz);
  d.rng_seed = j.value("rng_seed", d.rng_seed);
  d.reverb = j.value("reverb", d.reverb);
  d.noise = j.value("noise", d.noise);
  d.lowpass = j.value("lowpass", d.lowpass);
  d.noise_after_filter = j.value("noise_after_filter", d.noise_after_filter);
  d.absorption = j.value("absorption", d.absorption);
  d.noise_offset = j.value("noise_offset", d.noise_offset);
  d.noise_gain = j.value("noise_gain", d.noise_gain);
  d.rir_gain = j.value("rir_gain", d.rir_gain);
  d.rt60_measured_s = j.value("rt60_measured_s", d.rt60_measured_s);
  s = d;
}

namespace {

json RangeJson(const Range &r) { return json::array({r.lo, r.hi}); }

Range RangeFrom(const json &j, const char *key, Range def) {
  if (!j.contains(key)) return def;
  const auto &v = j.at(key);
  DMNET_CHECK(v.is_array() && v.size() == 2, kConfig,
              std::string(key) + " must be a [lo, hi] pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

void CheckRange(const Range &r, double lo, double hi, const char *name) {
  DMNET_CHECK(r.lo <= r.hi, kConfig, std::string(name) + ": lo > hi");
  DMNET_CHECK(r.lo >= lo && r.hi <= hi, kConfig,
              std::string(name) + " outside the supported interval");
}

}  // namespace

void DistortionRanges::Validate() const {
  CheckRange(snr_db, -20.0, 60.0, "snr_db");
  CheckRange(rt60_s, 0.05, 3.0, "rt60_s");
  CheckRange(length_m, 1.0, 50.0, "length_m");
  CheckRange(width_m, 1.0, 50.0, "width_m");
  CheckRange(height_m, 1.0, 20.0, "height_m");
  CheckRange(cutoff_hz, 1.0, kSampleRate / 2.0 - 1.0, "cutoff_hz");
  DMNET_CHECK(!families.empty(), kConfig, "families must not be empty");
  DMNET_CHECK(clearance_m >= 0.0, kConfig, "clearance_m must be >= 0");
  DMNET_CHECK(2.0 * clearance_m < std::min({length_m.lo, width_m.lo, height_m.lo}),
              kConfig, "clearance leaves no room for source or microphone");
}

void to_json(json &j, const DistortionRanges &r) {
  std::vector<std::string> fam;
  for (auto f : r.families) fam.push_back(FilterFamilyName(f));
  j = json{{"snr_db", RangeJson(r.snr_db)},
           {"rt60_s", RangeJson(r.rt60_s)},
           {"length_m", RangeJson(r.length_m)},
           {"width_m", RangeJson(r.width_m)},
           {"height_m", RangeJson(r.height_m)},
           {"cutoff_hz", RangeJson(r.cutoff_hz)},
           {"families", fam},
           {"clearance_m", r.clearance_m},
           {"min_distance_m", r.min_distance_m},
           {"reverb", r.reverb},
           {"noise", r.noise},
           {"lowpass", r.lowpass},
           {"noise_after_filter", r.noise_after_filter}};
}

void from_json(const json &j, DistortionRanges &r) {
  static const char *kKeys[] = {"snr_db", "rt60_s", "length_m", "width_m",
                                "height_m", "cutoff_hz", "families",
                                "clearance_m", "min_distance_m", "reverb",
                                "noise", "lowpass", "noise_after_filter"};
  DMNET_CHECK(j.is_object(), kConfig, "distortion ranges must be an object");
  for (const auto &[key, _] : j.items()) {
    DMNET_CHECK(std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys),
                kConfig, "unknown distortion key '" + key + "'");
  }
  DistortionRanges d;
  d.snr_db = RangeFrom(j, "snr_db", d.snr_db);
  d.rt60_s = RangeFrom(j, "rt60_s", d.rt60_s);
  d.length_m = RangeFrom(j, "length_m", d.length_m);
  d.width_m = RangeFrom(j, "width_m", d.width_m);
  d.height_m = RangeFrom(j, "height_m", d.height_m);
  d.cutoff_hz = RangeFrom(j, "cutoff_hz", d.cutoff_hz);
  if (j.contains("families")) {
    d.families.clear();
    for (const auto &f : j.at("families"))
      d.families.push_back(ParseFilterFamily(f.get<std::string>()));
  }
  d.clearance_m = j.value("clearance_m", d.clearance_m);
  d.min_distance_m = j.value("min_distance_m", d.min_distance_m);
  d.reverb = j.value("reverb", d.reverb);
  d.noise = j.value("noise", d.noise);
  d.lowpass = j.value("lowpass", d.lowpass);
  d.noise_after_filter = j.value("noise_after_filter", d.noise_after_filter);
  d.Validate();
  r = d;
}

DistortionSpec SampleDistortion(const DistortionRanges &ranges, Rng *rng) {
  ranges.Validate();
  DistortionSpec s;
  s.snr_db = rng->Uniform(ranges.snr_db.lo, ranges.snr_db.hi);
  s.rt60_s = rng->Uniform(ranges.rt60_s.lo, ranges.rt60_s.hi);
  s.room_dims = {rng->Uniform(ranges.length_m.lo, ranges.length_m.hi),
                 rng->Uniform(ranges.width_m.lo, ranges.width_m.hi),
                 rng->Uniform(ranges.height_m.lo, ranges.height_m.hi)};
  const double c = ranges.clearance_m;
  auto position = [&] {
    Vec3 p;
    for (int k = 0; k < 3; ++k) p[k] = rng->Uniform(c, s.room_dims[k] - c);
    return p;
  };
  // Rejection sampling for the source-microphone spacing; rooms are at least
  // a few meters long so this terminates quickly in practice.
  for (int attempt = 0; attempt < 64; ++attempt) {
    s.src_pos = position();
    s.mic_pos = position();
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k)
      d2 += (s.src_pos[k] - s.mic_pos[k]) * (s.src_pos[k] - s.mic_pos[k]);
    if (std::sqrt(d2) >= ranges.min_distance_m) break;
  }
  s.filter_family = ranges.families[rng->UniformInt(
      0, static_cast<int64_t>(ranges.families.size()) - 1)];
  s.filter_order = DefaultFilterOrder(s.filter_family);
  s.cutoff_hz = rng->Uniform(ranges.cutoff_hz.lo, ranges.cutoff_hz.hi);
  s.rng_seed = rng->NextU64();
  s.reverb = ranges.reverb;
  s.noise = ranges.noise;
  s.lowpass = ranges.lowpass;
  s.noise_after_filter = ranges.noise_after_filter;
  return s;
}

void ValidateSpec(const DistortionSpec &spec) {
  DMNET_CHECK(std::isfinite(spec.snr_db), kConfig, "snr_db must be finite");
  if (spec.reverb) {
    ValidateGeometry(spec.Room(), 0.3);
    DMNET_CHECK(spec.absorption > 0.0 || spec.rt60_s > 0.0, kConfig,
                "rt60_s must be positive");
  }
  if (spec.lowpass) DesignLowpass(spec.Filter());
}

Rir GenerateRir(const DistortionSpec &spec) {
  ValidateGeometry(spec.Room(), 0.3);
  Rir r;
  r.rt60_target_s = spec.rt60_s;
  if (spec.absorption > 0.0) {
    r.absorption = spec.absorption;
  } else {
    DMNET_CHECK(spec.rt60_s > 0.0, kConfig, "rt60_s must be positive");
    r.absorption = CalibrateAbsorption(spec.Room(), spec.rt60_s).absorption;
  }
  auto ir = ImageSourceRir(spec.Room(), r.absorption);
  r.taps = std::move(ir.taps);
  r.direct_delay = ir.direct_delay;
  r.rt60_measured_s = Rt60Schroeder(r.taps);
  return r;
}

Rir GenerateFixedRir(const DistortionSpec &spec, double absorption) {
  DistortionSpec s = spec;
  s.absorption = absorption;
  Rir r = GenerateRir(s);
  r.rt60_target_s = EyringRt60(spec.room_dims, absorption);
  return r;
}

std::vector<double> Convolve(const std::vector<double> &x,
                             const std::vector<double> &h) {
  DMNET_CHECK(!h.empty(), kConfig, "empty impulse response");
  const int64_t n = static_cast<int64_t>(x.size());
  if (n == 0) return {};
  const int64_t m = static_cast<int64_t>(h.size());
  if (n * std::min(n, m) <= (int64_t{1} << 20)) {
    // Direct sum for small problems; exact for sparse kernels.
    std::vector<double> y(n, 0.0);
    for (int64_t k = 0; k < std::min(n, m); ++k) {
      if (h[k] == 0.0) continue;
      for (int64_t i = k; i < n; ++i) y[i] += h[k] * x[i - k];
    }
    return y;
  }
  int64_t nfft = 1;
  while (nfft < n + m - 1) nfft <<= 1;
  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  auto tx = torch::from_blob(const_cast<double *>(x.data()), {n}, opts);
  auto th = torch::from_blob(const_cast<double *>(h.data()), {m}, opts);
  auto y = torch::fft::irfft(torch::fft::rfft(tx, nfft) * torch::fft::rfft(th, nfft), nfft)
               .slice(0, 0, n)
               .contiguous();
  const double *p = y.data_ptr<double>();
  return std::vector<double>(p, p + n);
}

Convolved ApplyRir(const Waveform &x, const std::vector<double> &taps) {
  DMNET_CHECK(!taps.empty(), kConfig, "empty impulse response");
  DMNET_CHECK(x.sample_rate == kSampleRate, kData, "expected 16 kHz input");
  Convolved c;
  c.output = Waveform(Convolve(x.samples, taps), x.id);
  double peak = 0.0;
  for (double v : c.output.samples) peak = std::max(peak, std::abs(v));
  if (peak > 1.0) {
    c.gain = 1.0 / peak;
    for (double &v : c.output.samples) v *= c.gain;
  }
  return c;
}

Mixture MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db,
                 int64_t offset) {
  DMNET_CHECK(std::isfinite(snr_db), kConfig, "SNR must be finite");
  DMNET_CHECK(noise.size() >= clean.size(), kData,
              "noise shorter than the speech it is mixed with");
  DMNET_CHECK(offset >= 0 && offset + clean.size() <= noise.size(), kData,
              "noise offset out of range");
  const std::span<const double> crop(noise.samples.data() + offset,
                                     static_cast<size_t>(clean.size()));
  const double speech = ActiveSpeechPower(clean.samples);
  const double np = MeanPower(crop);
  DMNET_CHECK(np > 0.0, kEnergy, "noise segment is silent");
  Mixture m;
  m.noise_offset = offset;
  m.noise_gain = std::sqrt(speech / (np * std::pow(10.0, snr_db / 10.0)));
  m.mixture = clean;
  for (int64_t i = 0; i < clean.size(); ++i)
    m.mixture.samples[i] += m.noise_gain * crop[i];
  return m;
}

Mixture MixAtSnr(const Waveform &clean, const Waveform &noise, double snr_db,
                 Rng *rng) {
  DMNET_CHECK(noise.size() >= clean.size(), kData,
              "noise shorter than the speech it is mixed with");
  return MixAtSnr(clean, noise, snr_db,
                  rng->UniformInt(0, noise.size() - clean.size()));
}

Degraded Degrade(const Waveform &clean, const Waveform &noise,
                 const DistortionSpec &spec, Rng *rng,
                 const DegradeOptions &options) {
  ValidateSpec(spec);
  Rng own(spec.rng_seed);
  if (rng == nullptr) rng = &own;
  Degraded out;
  out.spec = spec;

  Waveform speech = clean;
  if (spec.reverb) {
    Rir rir = GenerateRir(spec);
    auto conv = ApplyRir(clean, rir.taps);
    speech = std::move(conv.output);
    out.spec.absorption = rir.absorption;
    out.spec.rir_gain = conv.gain;
    out.spec.rt60_measured_s = rir.rt60_measured_s;
    out.trace.rir = std::move(rir.taps);
  }
  std::unique_ptr<IirFilter> filter;
  if (spec.lowpass) filter = std::make_unique<IirFilter>(DesignLowpass(spec.Filter()));

  if (spec.lowpass && spec.noise_after_filter) {
    out.trace.filter_input = speech.samples;
    speech.samples = filter->Apply(speech.samples);
    out.trace.filter_output = speech.samples;
  }
  out.trace.speech = speech.samples;

  Waveform mix = speech;
  if (spec.noise) {
    int64_t offset = spec.noise_offset;
    if (offset < 0) {
      DMNET_CHECK(noise.size() >= clean.size(), kData,
                  "noise shorter than the speech it is mixed with");
      offset = rng->UniformInt(0, noise.size() - clean.size());
    }
    auto m = MixAtSnr(speech, noise, spec.snr_db - options.snr_error_db, offset);
    mix = std::move(m.mixture);
    out.spec.noise_offset = m.noise_offset;
    out.spec.noise_gain = m.noise_gain;
  }
  out.trace.mixture = mix.samples;

  if (spec.lowpass && !spec.noise_after_filter) {
    out.trace.filter_input = mix.samples;
    mix.samples = filter->Apply(mix.samples);
    out.trace.filter_output = mix.samples;
  }
  out.degraded = std::move(mix);
  out.degraded.id = clean.id;
  return out;
}

std::string VerificationReport::Failures() const {
  std::ostringstream os;
  if (!snr_ok) os << "snr " << measured_snr_db << " dB; ";
  if (!rt60_ok) os << "rt60 " << rt60_s << " s; ";
  if (!bandwidth_ok) os << "bandwidth " << bandwidth_hz << " Hz; ";
  std::string s = os.str();
  if (s.size() >= 2) s.resize(s.size() - 2);
  return s;
}

void to_json(json &j, const VerificationReport &r) {
  j = json{{"passed", r.passed()},
           {"snr_ok", r.snr_ok},
           {"rt60_ok", r.rt60_ok},
           {"bandwidth_ok", r.bandwidth_ok},
           {"bandwidth_hz", r.bandwidth_hz}};
  // JSON has no infinity; a missing noise component is reported as null.
  if (std::isfinite(r.measured_snr_db))
    j["measured_snr_db"] = r.measured_snr_db;
  else
    j["measured_snr_db"] = nullptr;
  if (r.has_rt60)
    j["rt60_s"] = r.rt60_s;
  else
    j["rt60_s"] = nullptr;
}

double EstimateBandwidth(const std::vector<double> &input,
                         const std::vector<double> &output) {
  DMNET_CHECK(input.size() == output.size(), kDimension,
              "bandwidth: length mismatch");
  constexpr int64_t kFft = 1024;
  constexpr int64_t kHop = 256;
  const int64_t n = static_cast<int64_t>(input.size());
  DMNET_CHECK(n >= kFft, kDimension, "bandwidth: signal shorter than one frame");
  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  auto x = torch::from_blob(const_cast<double *>(input.data()), {n}, opts);
  auto y = torch::from_blob(const_cast<double *>(output.data()), {n}, opts);
  auto win = torch::hann_window(kFft, /*periodic=*/true, opts);
  auto fx = torch::fft::rfft(x.unfold(0, kFft, kHop) * win);
  auto fy = torch::fft::rfft(y.unfold(0, kFft, kHop) * win);
  auto pxx = (fx.abs().pow(2)).sum(0);
  auto pxy = (fx.conj() * fy).sum(0).abs();
  auto h2 = (pxy / pxx.clamp_min(1e-300)).pow(2).contiguous();
  const double *g = h2.data_ptr<double>();
  const int64_t bins = h2.size(0);
  const double bin_hz = static_cast<double>(kSampleRate) / kFft;
  const double ref = g[1];  // low-frequency passband reference
  for (int64_t k = 2; k < bins; ++k) {
    if (g[k] < 0.5 * ref) {
      const double a = 10.0 * std::log10(g[k - 1] / ref);
      const double b = 10.0 * std::log10(std::max(g[k], 1e-300) / ref);
      const double frac = (a + 3.0103) / (a - b);
      return (static_cast<double>(k - 1) + frac) * bin_hz;
    }
  }
  return kSampleRate / 2.0;
}

VerificationReport VerifyDegradation(const DegradeTrace &trace,
                                     const DistortionSpec &spec,
                                     const VerifyTolerance &tol) {
  VerificationReport r;
  const bool noisy = trace.mixture.size() == trace.speech.size() &&
                     !trace.speech.empty();
  if (noisy) {
    r.measured_snr_db = MeasuredSnr(trace.speech, trace.mixture);
    if (spec.noise) {
      r.snr_ok = std::abs(r.measured_snr_db - spec.snr_db) <= tol.snr_db;
    } else {
      r.snr_ok = std::isinf(r.measured_snr_db);
    }
  } else {
    r.measured_snr_db = std::numeric_limits<double>::infinity();
  }
  if (!trace.rir.empty()) {
    r.has_rt60 = true;
    r.rt60_s = Rt60Schroeder(trace.rir);
    // rt60_s <= 0 marks a fixed-absorption room without an RT60 target.
    if (spec.rt60_s > 0.0)
      r.rt60_ok = std::abs(r.rt60_s - spec.rt60_s) <= tol.rt60_rel * spec.rt60_s;
  }
  const double nyquist = kSampleRate / 2.0;
  if (!trace.filter_input.empty()) {
    r.bandwidth_hz = EstimateBandwidth(trace.filter_input, trace.filter_output);
    const double expected = spec.lowpass ? spec.cutoff_hz : nyquist;
    r.bandwidth_ok = std::abs(r.bandwidth_hz - expected) <= tol.bandwidth_rel * expected;
  } else {
    r.bandwidth_hz = nyquist;
    r.bandwidth_ok = !spec.lowpass;
  }
  return r;
}

}  // namespace dmnet
