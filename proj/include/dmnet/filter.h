// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_FILTER_H_
#define DMNET_FILTER_H_

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "dmnet/wav.h"

namespace dmnet {

enum class FilterFamily { kButterworth, kBessel, kChebyshev1, kElliptic };

std::string FilterFamilyName(FilterFamily family);
FilterFamily ParseFilterFamily(const std::string &name);

// Order used for each family when a corpus does not override it.
int DefaultFilterOrder(FilterFamily family);

struct LowpassDesign {
  FilterFamily family = FilterFamily::kButterworth;
  int order = 8;
  double cutoff_hz = 4000.0;
  double passband_ripple_db = 0.5;     // Chebyshev-I and elliptic
  double stopband_atten_db = 50.0;     // elliptic
};

// Zeros, poles and gain of a continuous- or discrete-time system.
struct Zpk {
  std::vector<std::complex<double>> zeros;
  std::vector<std::complex<double>> poles;
  double gain = 1.0;
};

// Analog low-pass prototypes with a 1 rad/s edge. Butterworth and Bessel
// are -3 dB at the edge; Chebyshev-I and elliptic have their passband
// ripple edge there.
Zpk AnalogPrototype(const LowpassDesign &design);

// A cascade of second-order sections with monic numerators and an overall
// gain, run in transposed direct form II at double precision.
class IirFilter {
 public:
  struct Section {
    double b0, b1, b2, a1, a2;  // a0 == 1
  };

  IirFilter(std::vector<Section> sections, double gain,
            std::vector<std::complex<double>> poles);

  // Causal filtering from zero initial state.
  std::vector<double> Apply(std::span<const double> x) const;
  std::complex<double> Response(double freq_hz) const;
  const std::vector<std::complex<double>> &poles() const { return poles_; }
  const std::vector<Section> &sections() const { return sections_; }

 private:
  std::vector<Section> sections_;
  double gain_;
  std::vector<std::complex<double>> poles_;
};

// Bilinear-transform design with frequency prewarping at 16 kHz. Cutoffs
// outside (0, 8000) Hz or an unsupported order are config errors; a design
// with any pole on or outside the unit circle is a design error.
IirFilter DesignLowpass(const LowpassDesign &design);

Waveform Lowpass(const Waveform &x, const LowpassDesign &design);

}  // namespace dmnet

#endif  // DMNET_FILTER_H_
