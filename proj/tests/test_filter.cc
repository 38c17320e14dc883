// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "doctest_torch.h"

#include <algorithm>
#include <cmath>

#include "dmnet/error.h"
#include "dmnet/filter.h"
#include "test_helpers.h"

using namespace dmnet;
using dmnet::testing::Rms;
using dmnet::testing::Sine;

namespace {

const double kProbeHz[] = {100, 500, 1500, 2900, 3000, 3100, 3500, 4500, 6000, 7900};

// |H| in dB at kProbeHz for 3 kHz designs, computed with scipy.signal
// (butter/bessel(norm='mag')/cheby1/ellip, fs=16000, sosfreqz).
const double kScipyButter8[] = {1.92865493311e-15, -2.14080697575e-13, -1.41426318146e-05, -1.77149118022, -3.01029995664, -4.71821597967, -14.4438719946, -41.7497628014, -89.2612957611, -301.12347307};
const double kScipyBessel8[] = {-0.00252835878192, -0.0636354610845, -0.60658307539, -2.75611014593, -3.01029995664, -3.28411696052, -4.61629022473, -10.9970283147, -45.1271593406, -255.368929898};
const double kScipyCheby8[] = {-0.474286185774, -0.0749283470493, -0.333683490554, -0.241946972647, -0.5, -6.3822780466, -30.9444534737, -68.8219283694, -120.899118753, -334.128936568};
const double kScipyEllip6[] = {-0.491045294975, -0.301150058551, -0.212881075085, -0.20432989931, -0.5, -6.69484703667, -45.1989491983, -51.6497067362, -70.1866765654, -50.0254294084};

double Db(std::complex<double> h) { return 20.0 * std::log10(std::abs(h)); }

void CheckAgainstScipy(FilterFamily family, int order, const double *expected) {
  LowpassDesign d;
  d.family = family;
  d.order = order;
  d.cutoff_hz = 3000.0;
  auto filt = DesignLowpass(d);
  for (int i = 0; i < 10; ++i) {
    // Deep-stopband values are limited by double rounding in either tool.
    const double tol = expected[i] < -150.0 ? 0.5 : 1e-6;
    INFO(FilterFamilyName(family) << " at " << kProbeHz[i] << " Hz");
    CHECK(std::abs(Db(filt.Response(kProbeHz[i])) - expected[i]) <= tol);
  }
}

// Steady-state gain of a sine through the filter, skipping the transient.
double SineGainDb(const IirFilter &filt, double freq) {
  auto x = Sine(32000, freq, 0.5);
  auto y = filt.Apply(x);
  return 20.0 * std::log10(Rms(y, 16000, 32000) / Rms(x, 16000, 32000));
}

}  // namespace

TEST_SUITE("filter") {

TEST_CASE("frequency responses match scipy designs") {
  CheckAgainstScipy(FilterFamily::kButterworth, 8, kScipyButter8);
  CheckAgainstScipy(FilterFamily::kBessel, 8, kScipyBessel8);
  CheckAgainstScipy(FilterFamily::kChebyshev1, 8, kScipyCheby8);
  CheckAgainstScipy(FilterFamily::kElliptic, 6, kScipyEllip6);
}

TEST_CASE("analog elliptic prototype matches scipy ellipap") {
  LowpassDesign d;
  d.family = FilterFamily::kElliptic;
  d.order = 6;
  auto zpk = AnalogPrototype(d);
  CHECK(zpk.gain == doctest::Approx(0.00316227766016838).epsilon(1e-9));
  std::vector<double> zero_im;
  for (auto z : zpk.zeros) {
    CHECK(std::abs(z.real()) < 1e-12);
    if (z.imag() > 0) zero_im.push_back(z.imag());
  }
  std::sort(zero_im.begin(), zero_im.end());
  REQUIRE(zero_im.size() == 3);
  CHECK(zero_im[0] == doctest::Approx(1.26636556287).epsilon(1e-9));
  CHECK(zero_im[1] == doctest::Approx(1.56593224859).epsilon(1e-9));
  CHECK(zero_im[2] == doctest::Approx(3.82407814952).epsilon(1e-9));
  bool found = false;
  for (auto p : zpk.poles)
    found |= std::abs(p - std::complex<double>(-0.0438174975058, 1.0074832227)) < 1e-9;
  CHECK(found);
}

TEST_CASE("analog Bessel prototype matches scipy besselap(norm='mag')") {
  LowpassDesign d;
  d.family = FilterFamily::kBessel;
  d.order = 8;
  auto zpk = AnalogPrototype(d);
  CHECK(zpk.gain == doctest::Approx(194.026193303335).epsilon(1e-8));
  bool found = false;
  for (auto p : zpk.poles)
    found |= std::abs(p - std::complex<double>(-0.892869718847, 1.99832584364)) < 1e-9;
  CHECK(found);
}

TEST_CASE("Butterworth-8 passband and stopband sine gains") {
  for (double cutoff : {2000.0, 3000.0, 4000.0}) {
    LowpassDesign d;
    d.cutoff_hz = cutoff;
    auto filt = DesignLowpass(d);
    CHECK(std::abs(SineGainDb(filt, cutoff / 4)) < 1.0);
    if (2 * cutoff < 7900) CHECK(SineGainDb(filt, 2 * cutoff) <= -24.0);
    CHECK(SineGainDb(filt, 1.5 * cutoff) <= -20.0);
    // The measured gain agrees with the designed response.
    CHECK(SineGainDb(filt, 1.5 * cutoff) ==
          doctest::Approx(Db(filt.Response(1.5 * cutoff))).epsilon(0.01));
  }
}

TEST_CASE("order-6 Butterworth still gives 20 dB at 1.5x cutoff") {
  LowpassDesign d;
  d.order = 6;
  d.cutoff_hz = 3000;
  CHECK(Db(DesignLowpass(d).Response(4500)) <= -20.0);
}

TEST_CASE("DC passes every family unchanged") {
  for (auto fam : {FilterFamily::kButterworth, FilterFamily::kBessel,
                   FilterFamily::kChebyshev1, FilterFamily::kElliptic}) {
    LowpassDesign d;
    d.family = fam;
    d.order = DefaultFilterOrder(fam);
    d.cutoff_hz = 2500;
    auto filt = DesignLowpass(d);
    std::vector<double> x(24000, 0.0);
    std::fill(x.begin(), x.begin() + 16000, 0.25);
    auto y = filt.Apply(x);
    const double dc = std::abs(filt.Response(0.0));
    // Even-order ripple designs sit at the bottom of the ripple at DC.
    CHECK(dc == doctest::Approx(fam == FilterFamily::kChebyshev1 ||
                                        fam == FilterFamily::kElliptic
                                    ? std::pow(10.0, -0.5 / 20)
                                    : 1.0)
                    .epsilon(1e-9));
    CHECK(y[15999] == doctest::Approx(0.25 * dc).epsilon(1e-6));
  }
}

TEST_CASE("all designs are stable across the cutoff range") {
  for (auto fam : {FilterFamily::kButterworth, FilterFamily::kBessel,
                   FilterFamily::kChebyshev1, FilterFamily::kElliptic}) {
    for (double cutoff = 100.0; cutoff < 8000.0; cutoff += 317.0) {
      LowpassDesign d;
      d.family = fam;
      d.order = DefaultFilterOrder(fam);
      d.cutoff_hz = cutoff;
      auto filt = DesignLowpass(d);
      INFO(FilterFamilyName(fam) << " " << cutoff);
      for (auto p : filt.poles()) REQUIRE(std::abs(p) < 1.0);
    }
    LowpassDesign near;
    near.family = fam;
    near.order = DefaultFilterOrder(fam);
    near.cutoff_hz = 7999;
    INFO(FilterFamilyName(fam) << " near nyquist");
    const auto near_filter = DesignLowpass(near);
    for (auto p : near_filter.poles()) REQUIRE(std::abs(p) < 1.0);
  }
}

TEST_CASE("invalid designs are rejected") {
  LowpassDesign d;
  d.cutoff_hz = 8000;
  CHECK_THROWS_AS(DesignLowpass(d), Error);
  d.cutoff_hz = 0;
  CHECK_THROWS_AS(DesignLowpass(d), Error);
  d.cutoff_hz = 3000;
  d.order = 0;
  CHECK_THROWS_AS(DesignLowpass(d), Error);
  CHECK_THROWS_AS(ParseFilterFamily("chebyshev2"), Error);
  CHECK(ParseFilterFamily("ellip") == FilterFamily::kElliptic);
}

}  // TEST_SUITE
