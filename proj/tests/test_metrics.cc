// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "doctest_torch.h"

#include <cmath>
#include <limits>

#include "dmnet/error.h"
#include "dmnet/metrics.h"
#include "dmnet/synth.h"
#include "test_helpers.h"

using namespace dmnet;
using dmnet::testing::BruteForceLsd;
using dmnet::testing::StoiProbe;
using dmnet::testing::WhiteNoise;

TEST_SUITE("metrics") {

TEST_CASE("lsd of identical signals is zero") {
  Waveform x(WhiteNoise(8000, 1));
  CHECK(Lsd(x, x) == 0.0);
}

TEST_CASE("lsd of a 10x amplitude copy is 20 dB") {
  auto x = SynthesizeSpeechLike(1.0, 3);
  Waveform y = x;
  for (auto &v : y.samples) v *= 10.0;
  // The floor perturbs near-silent bins only; speech-like input has none at
  // the 1e-10 level inside the frames.
  CHECK(Lsd(x, y) == doctest::Approx(20.0).epsilon(1e-3));
  Waveform w(WhiteNoise(8000, 4));
  Waveform w10 = w;
  for (auto &v : w10.samples) v *= 10.0;
  CHECK(Lsd(w, w10) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("lsd matches the brute-force loop oracle") {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    auto a = WhiteNoise(5000 + 731 * seed, 10 + seed);
    auto b = WhiteNoise(5000 + 731 * seed, 20 + seed, 0.05);
    for (size_t i = 0; i < a.size(); ++i) b[i] += 0.7 * a[i];
    const double fast = Lsd(Waveform(a), Waveform(b));
    const double slow = BruteForceLsd(a, b);
    CHECK(std::abs(fast - slow) < 1e-9);
  }
}

TEST_CASE("lsd is symmetric and grows along a log-power path") {
  auto a = WhiteNoise(6000, 31);
  auto b = WhiteNoise(6000, 32);
  CHECK(Lsd(Waveform(a), Waveform(b)) == Lsd(Waveform(b), Waveform(a)));
  // est(θ) = a * 10^(θ·k/20) is the log-power interpolation between a and
  // a k dB louder copy: every bin moves by θ·k dB, so LSD = θ·k.
  double prev = -1.0;
  for (int i = 0; i <= 10; ++i) {
    const double theta = i / 10.0;
    std::vector<double> est(a);
    for (auto &v : est) v *= std::pow(10.0, theta * 6.0 / 20.0);
    const double d = Lsd(Waveform(a), Waveform(est));
    CHECK(d >= prev);
    CHECK(d == doctest::Approx(6.0 * theta).epsilon(1e-6));
    prev = d;
  }
}

TEST_CASE("lsd errors") {
  Waveform a(WhiteNoise(4000, 1)), b(WhiteNoise(4001, 2));
  CHECK_THROWS_AS(Lsd(a, b), Error);
  Waveform silent(std::vector<double>(4000, 0.0));
  try {
    Lsd(silent, a);
    FAIL("expected an energy error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kEnergy);
  }
}

TEST_CASE("stoi matches pinned reference values") {
  Waveform x(StoiProbe(0)), y(StoiProbe(1)), z(StoiProbe(2));
  CHECK(Stoi(x, x) >= 0.999);
  CHECK(Stoi(x, y) == doctest::Approx(0.7963847273865278).epsilon(1e-6));
  CHECK(Stoi(x, z) == doctest::Approx(0.06905557518823967).epsilon(1e-5));
}

TEST_CASE("stoi is scale invariant and low for unrelated noise") {
  auto x = SynthesizeSpeechLike(3.0, 11);
  Waveform noisy = x;
  auto n = WhiteNoise(x.size(), 12, 0.05);
  for (int64_t i = 0; i < x.size(); ++i) noisy.samples[i] += n[i];
  const double base = Stoi(x, noisy);
  for (double a : {0.01, 0.5, 3.0, 100.0}) {
    Waveform scaled = noisy;
    for (auto &v : scaled.samples) v *= a;
    CHECK(std::abs(Stoi(x, scaled) - base) < 1e-6);
  }
  // Independent noise against the three-tone probe; pystoi 0.4.1 gives
  // 0.0463710942763 on the float32-rounded noise.
  Waveform probe(StoiProbe(0));
  Waveform indep(WhiteNoise(probe.size(), 13));
  const double s = Stoi(probe, indep);
  CHECK(s == doctest::Approx(0.0463710942763).epsilon(1e-6));
  CHECK(s < 0.3);
}

TEST_CASE("stoi rejects signals shorter than one segment") {
  auto x = SynthesizeSpeechLike(0.2, 1);
  CHECK_THROWS_AS(Stoi(x, x), Error);
}

TEST_CASE("si-sdr cap and scale invariance") {
  Waveform x(WhiteNoise(8000, 5));
  Waveform x2 = x;
  for (auto &v : x2.samples) v *= 2.0;
  CHECK(SiSdr(x, x) == kSiSdrCapDb);
  CHECK(SiSdr(x, x2) == kSiSdrCapDb);
  // est = x + e with e orthogonal-ish at -20 dB.
  Waveform y = x;
  auto e = WhiteNoise(8000, 6, 0.01);
  for (int64_t i = 0; i < y.size(); ++i) y.samples[i] += e[i];
  CHECK(SiSdr(x, y) == doctest::Approx(20.0).epsilon(0.02));
  Waveform zero(std::vector<double>(8000, 0.0));
  CHECK_THROWS_AS(SiSdr(zero, x), Error);
}

TEST_CASE("measured snr by residual") {
  auto s = WhiteNoise(16000, 7, 0.1);
  auto n = WhiteNoise(16000, 8, 0.1);
  std::vector<double> mix(s);
  for (size_t i = 0; i < s.size(); ++i) mix[i] += 0.1 * n[i];
  const double ps = dmnet::testing::Rms(s), pn = 0.1 * dmnet::testing::Rms(n);
  CHECK(MeasuredSnr(s, mix) == doctest::Approx(20.0 * std::log10(ps / pn)).epsilon(1e-9));
  CHECK(std::isinf(MeasuredSnr(s, s)));
}

TEST_CASE("schroeder rt60 of a closed-form exponential decay") {
  for (double rt60 : {0.3, 0.5, 0.9}) {
    // Energy envelope falls 60 dB in rt60: amplitude exp(-6.9078 t / rt60).
    const int64_t n = static_cast<int64_t>(1.5 * rt60 * kSampleRate);
    auto h = WhiteNoise(n, 9);
    const double k = 3.0 * std::log(10.0) / rt60;
    for (int64_t i = 0; i < n; ++i)
      h[i] *= std::exp(-k * static_cast<double>(i) / kSampleRate);
    CHECK(std::abs(Rt60Schroeder(h) - rt60) <= 0.1 * rt60);
  }
  std::vector<double> h(16000);
  const double k = 3.0 * std::log(10.0) / 0.5;
  for (int64_t i = 0; i < 16000; ++i) h[i] = std::exp(-k * i / 16000.0);
  CHECK(std::abs(Rt60Schroeder(h) - 0.5) <= 0.05);
}

}  // TEST_SUITE
