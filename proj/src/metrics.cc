// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/metrics.h"

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "dmnet/error.h"
#include "dmnet/level.h"
#include "dmnet/stft.h"

namespace dmnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void CheckPair(const Waveform &ref, const Waveform &est, const char *what) {
  DMNET_CHECK(ref.size() == est.size(), kDimension,
              std::string(what) + ": length mismatch (" +
                  std::to_string(ref.size()) + " vs " +
                  std::to_string(est.size()) + ")");
  DMNET_CHECK(ref.sample_rate == kSampleRate && est.sample_rate == kSampleRate,
              kData, std::string(what) + ": inputs must be 16 kHz");
}

}  // namespace

double Lsd(const Waveform &ref, const Waveform &est) {
  CheckPair(ref, est, "LSD");
  DMNET_CHECK(MeanPower(ref.samples) > 0.0, kEnergy,
              "LSD reference is silent (degenerate)");
  StftConfig cfg;
  cfg.n_fft = kLsdFft;
  cfg.hop = kLsdHop;
  cfg.win_length = kLsdFft;
  cfg.compress_exponent = 1.0;
  Stft stft(cfg);
  auto p_ref = stft.Forward(ToTensor(ref)).abs().square() + kLsdFloor;
  auto p_est = stft.Forward(ToTensor(est)).abs().square() + kLsdFloor;
  auto diff = 10.0 * (torch::log10(p_ref) - torch::log10(p_est));
  return diff.square().mean(-1).sqrt().mean().item<double>();
}

// ---------------------------------------------------------------- STOI ---

namespace {

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiFft = 512;
constexpr int kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr int kStoiSegment = 30;
constexpr double kStoiBeta = -15.0;
constexpr double kStoiDynRange = 40.0;

// Kaiser-windowed sinc resampler by up/down, matching the Octave-compatible
// polyphase design commonly used for STOI.
std::vector<double> ResampleOct(const std::vector<double> &x, int up, int down) {
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  const double stop = 1.0 / (2.0 * std::max(up, down));
  const double rejection_db = 60.0;
  const int half = static_cast<int>(
      std::ceil((rejection_db - 8.0) / (28.714 * stop / 10.0)));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const int taps = 2 * half + 1;
  std::vector<double> h(taps);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  double sum = 0.0;
  for (int n = 0; n < taps; ++n) {
    const double t = n - half;
    const double arg = 2.0 * stop * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(kPi * arg) / (kPi * arg);
    const double rel = (n - half) / static_cast<double>(half);
    const double kaiser =
        std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - rel * rel))) /
        i0_beta;
    h[n] = kaiser * 2.0 * up * stop * sinc;
    sum += h[n];
  }
  for (double &v : h) v = v / sum * up;

  const int64_t n_in = static_cast<int64_t>(x.size());
  const int64_t n_out = (n_in * up + down - 1) / down;
  const int pre_pad = down - half % down;
  const int64_t pre_remove = (half + pre_pad) / down;
  std::vector<double> hp(pre_pad, 0.0);
  hp.insert(hp.end(), h.begin(), h.end());
  const int64_t hlen = static_cast<int64_t>(hp.size());

  std::vector<double> y(n_out, 0.0);
  for (int64_t j = 0; j < n_out; ++j) {
    const int64_t pos = (j + pre_remove) * down;  // index into upsampled x
    // Sum over input samples i with 0 <= pos - i*up < hlen.
    int64_t i_lo = std::max<int64_t>(0, (pos - hlen + up) / up);
    while (i_lo > 0 && pos - (i_lo - 1) * up < hlen) --i_lo;
    while (pos - i_lo * up >= hlen) ++i_lo;
    const int64_t i_hi = std::min<int64_t>(n_in - 1, pos / up);
    double acc = 0.0;
    for (int64_t i = i_lo; i <= i_hi; ++i) acc += x[i] * hp[pos - i * up];
    y[j] = acc;
  }
  return y;
}

std::vector<double> StoiWindow() {
  std::vector<double> w(kStoiFrame);
  for (int n = 0; n < kStoiFrame; ++n)
    w[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * (n + 1) / (kStoiFrame + 1)));
  return w;
}

void RemoveSilentFrames(std::vector<double> *x, std::vector<double> *y) {
  const auto w = StoiWindow();
  const int hop = kStoiFrame / 2;
  const int64_t len = static_cast<int64_t>(x->size());
  std::vector<int64_t> starts;
  std::vector<double> energy;
  for (int64_t i = 0; i < len - kStoiFrame; i += hop) {
    double acc = 0.0;
    for (int n = 0; n < kStoiFrame; ++n) {
      const double v = w[n] * (*x)[i + n];
      acc += v * v;
    }
    starts.push_back(i);
    energy.push_back(20.0 * std::log10(std::sqrt(acc) + kEps));
  }
  if (starts.empty()) {
    x->clear();
    y->clear();
    return;
  }
  const double peak = *std::max_element(energy.begin(), energy.end());
  std::vector<int64_t> kept;
  for (size_t k = 0; k < starts.size(); ++k)
    if (peak - kStoiDynRange - energy[k] < 0) kept.push_back(starts[k]);
  const int64_t out_len =
      (static_cast<int64_t>(kept.size()) - 1) * hop + kStoiFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (size_t k = 0; k < kept.size(); ++k) {
    const int64_t o = static_cast<int64_t>(k) * hop;
    for (int n = 0; n < kStoiFrame; ++n) {
      xo[o + n] += w[n] * (*x)[kept[k] + n];
      yo[o + n] += w[n] * (*y)[kept[k] + n];
    }
  }
  *x = std::move(xo);
  *y = std::move(yo);
}

// Third-octave band energies: [bands][frames].
std::vector<std::vector<double>> ThirdOctaveEnvelopes(
    const std::vector<double> &x) {
  static const std::vector<std::pair<int, int>> bands = [] {
    const int nbins = kStoiFft / 2 + 1;
    std::vector<std::pair<int, int>> out;
    auto nearest = [&](double freq) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < nbins; ++k) {
        const double f = static_cast<double>(k) * kStoiRate / kStoiFft;
        const double d = (f - freq) * (f - freq);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      return best;
    };
    for (int b = 0; b < kStoiBands; ++b) {
      const double lo = kStoiMinFreq * std::pow(2.0, (2.0 * b - 1) / 6.0);
      const double hi = kStoiMinFreq * std::pow(2.0, (2.0 * b + 1) / 6.0);
      out.emplace_back(nearest(lo), nearest(hi));
    }
    return out;
  }();
  const auto w = StoiWindow();
  const int hop = kStoiFrame / 2;
  const int64_t len = static_cast<int64_t>(x.size());
  int64_t frames = 0;
  for (int64_t i = 0; i < len - kStoiFrame; i += hop) ++frames;
  std::vector<std::vector<double>> env(kStoiBands, std::vector<double>(frames));
  if (frames == 0) return env;
  auto buf = torch::zeros({frames, kStoiFft}, torch::kFloat64);
  auto acc = buf.accessor<double, 2>();
  for (int64_t t = 0; t < frames; ++t)
    for (int n = 0; n < kStoiFrame; ++n) acc[t][n] = w[n] * x[t * hop + n];
  auto power = torch::fft::rfft(buf, kStoiFft, -1).abs().square().contiguous();
  auto p = power.accessor<double, 2>();
  for (int b = 0; b < kStoiBands; ++b) {
    for (int64_t t = 0; t < frames; ++t) {
      double e = 0.0;
      for (int k = bands[b].first; k < bands[b].second; ++k) e += p[t][k];
      env[b][t] = std::sqrt(e);
    }
  }
  return env;
}

}  // namespace

double Stoi(const Waveform &ref, const Waveform &est) {
  CheckPair(ref, est, "STOI");
  auto x = ResampleOct(ref.samples, kStoiRate, kSampleRate);
  auto y = ResampleOct(est.samples, kStoiRate, kSampleRate);
  RemoveSilentFrames(&x, &y);
  const auto xe = ThirdOctaveEnvelopes(x);
  const auto ye = ThirdOctaveEnvelopes(y);
  const int64_t frames = static_cast<int64_t>(xe[0].size());
  DMNET_CHECK(frames >= kStoiSegment, kDimension,
              "STOI needs at least 30 frames (384 ms) of active speech, got " +
                  std::to_string(frames));

  const double clip = std::pow(10.0, -kStoiBeta / 20.0);
  double total = 0.0;
  int64_t segments = 0;
  std::vector<double> xs(kStoiSegment), ys(kStoiSegment);
  for (int64_t m = kStoiSegment; m <= frames; ++m, ++segments) {
    for (int b = 0; b < kStoiBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        xs[i] = xe[b][m - kStoiSegment + i];
        ys[i] = ye[b][m - kStoiSegment + i];
        nx += xs[i] * xs[i];
        ny += ys[i] * ys[i];
      }
      const double scale = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        ys[i] = std::min(ys[i] * scale, xs[i] * (1.0 + clip));
        mx += xs[i];
        my += ys[i];
      }
      mx /= kStoiSegment;
      my /= kStoiSegment;
      double sxx = 0.0, syy = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        xs[i] -= mx;
        ys[i] -= my;
        sxx += xs[i] * xs[i];
        syy += ys[i] * ys[i];
      }
      const double dx = std::sqrt(sxx) + kEps, dy = std::sqrt(syy) + kEps;
      double corr = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) corr += (xs[i] / dx) * (ys[i] / dy);
      total += corr;
    }
  }
  return total / static_cast<double>(segments * kStoiBands);
}

double SiSdr(const Waveform &ref, const Waveform &est) {
  CheckPair(ref, est, "SI-SDR");
  const size_t n = ref.samples.size();
  const double mr = std::accumulate(ref.samples.begin(), ref.samples.end(), 0.0) / n;
  const double me = std::accumulate(est.samples.begin(), est.samples.end(), 0.0) / n;
  double dot = 0.0, rr = 0.0, ee = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = ref.samples[i] - mr, e = est.samples[i] - me;
    dot += r * e;
    rr += r * r;
    ee += e * e;
  }
  DMNET_CHECK(rr > 0.0 && ee > 0.0, kEnergy, "SI-SDR of a zero-energy signal");
  const double alpha = dot / rr;
  double target = 0.0, noise = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = alpha * (ref.samples[i] - mr);
    const double d = (est.samples[i] - me) - t;
    target += t * t;
    noise += d * d;
  }
  if (noise <= 0.0) return kSiSdrCapDb;
  return std::min(kSiSdrCapDb, 10.0 * std::log10(target / noise));
}

double MeasuredSnr(std::span<const double> clean,
                   std::span<const double> mixture) {
  DMNET_CHECK(clean.size() == mixture.size(), kDimension,
              "SNR: length mismatch");
  const double speech = ActiveSpeechPower(clean);
  double noise = 0.0;
  for (size_t i = 0; i < clean.size(); ++i) {
    const double d = mixture[i] - clean[i];
    noise += d * d;
  }
  noise /= static_cast<double>(clean.size());
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(speech / noise);
}

double Rt60Schroeder(std::span<const double> rir) {
  const size_t n = rir.size();
  std::vector<double> edc(n);
  double acc = 0.0;
  for (size_t i = n; i-- > 0;) {
    acc += rir[i] * rir[i];
    edc[i] = acc;
  }
  DMNET_CHECK(n > 0 && acc > 0.0, kEnergy, "RT60 of a zero impulse response");
  auto fit = [&](double upper_db, double lower_db, double *slope) {
    std::vector<double> ts, ds;
    for (size_t i = 0; i < n; ++i) {
      if (edc[i] <= 0.0) break;
      const double db = 10.0 * std::log10(edc[i] / acc);
      if (db > upper_db) continue;
      if (db < lower_db) break;
      ts.push_back(static_cast<double>(i) / kSampleRate);
      ds.push_back(db);
    }
    if (ts.size() < 2) return false;
    const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / ts.size();
    const double md = std::accumulate(ds.begin(), ds.end(), 0.0) / ds.size();
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
      num += (ts[i] - mt) * (ds[i] - md);
      den += (ts[i] - mt) * (ts[i] - mt);
    }
    if (den <= 0.0 || num >= 0.0) return false;
    *slope = num / den;
    return true;
  };
  auto reaches = [&](double db) {
    for (size_t i = 0; i < n; ++i)
      if (edc[i] > 0.0 && 10.0 * std::log10(edc[i] / acc) < db) return true;
    return false;
  };
  double slope = 0.0;
  const bool ok = reaches(-35.0) ? fit(-5.0, -35.0, &slope)
                                 : fit(-5.0, -25.0, &slope);
  DMNET_CHECK(ok, kDomain, "energy decay curve too short to estimate RT60");
  return -60.0 / slope;
}

}  // namespace dmnet
