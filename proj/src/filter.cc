// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/filter.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dmnet/error.h"

namespace dmnet {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::string FilterFamilyName(FilterFamily family) {
  switch (family) {
    case FilterFamily::kButterworth: return "butterworth";
    case FilterFamily::kBessel: return "bessel";
    case FilterFamily::kChebyshev1: return "chebyshev1";
    case FilterFamily::kElliptic: return "elliptic";
  }
  return "unknown";
}

FilterFamily ParseFilterFamily(const std::string &name) {
  if (name == "butterworth" || name == "butter") return FilterFamily::kButterworth;
  if (name == "bessel") return FilterFamily::kBessel;
  if (name == "chebyshev1" || name == "cheby1") return FilterFamily::kChebyshev1;
  if (name == "elliptic" || name == "ellip") return FilterFamily::kElliptic;
  Throw(ErrorKind::kConfig, "unsupported filter family '" + name + "'");
}

int DefaultFilterOrder(FilterFamily family) {
  return family == FilterFamily::kElliptic ? 6 : 8;
}

namespace {

Zpk Butterworth(int n) {
  Zpk zpk;
  for (int m = -n + 1; m < n; m += 2)
    zpk.poles.push_back(-std::exp(cd(0.0, kPi * m / (2.0 * n))));
  return zpk;
}

Zpk Chebyshev1(int n, double ripple_db) {
  const double eps = std::sqrt(std::pow(10.0, 0.1 * ripple_db) - 1.0);
  const double mu = std::asinh(1.0 / eps) / n;
  Zpk zpk;
  cd prod = 1.0;
  for (int m = -n + 1; m < n; m += 2) {
    const cd p = -std::sinh(cd(mu, kPi * m / (2.0 * n)));
    zpk.poles.push_back(p);
    prod *= -p;
  }
  zpk.gain = prod.real();
  if (n % 2 == 0) zpk.gain /= std::sqrt(1.0 + eps * eps);
  return zpk;
}

cd EvalPoly(const std::vector<double> &coef, cd s) {
  cd acc = 0.0;
  for (auto it = coef.rbegin(); it != coef.rend(); ++it) acc = acc * s + *it;
  return acc;
}

// Reverse Bessel polynomial roots, rescaled so that |H(j)| = 1/sqrt(2).
Zpk Bessel(int n) {
  std::vector<double> coef(n + 1);  // ascending powers, monic
  for (int k = 0; k <= n; ++k)
    coef[k] = std::tgamma(2.0 * n - k + 1) /
              (std::pow(2.0, n - k) * std::tgamma(k + 1.0) *
               std::tgamma(n - k + 1.0));
  // Durand-Kerner iteration for all roots at once, then Newton polishing.
  std::vector<double> deriv(n);
  for (int k = 1; k <= n; ++k) deriv[k - 1] = k * coef[k];
  std::vector<cd> roots(n);
  const double radius = std::pow(coef[0], 1.0 / n);
  for (int i = 0; i < n; ++i)
    roots[i] = radius * std::exp(cd(0.0, 2.0 * kPi * (i + 0.25) / n));
  for (int it = 0; it < 500; ++it) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      cd denom = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) denom *= roots[i] - roots[j];
      const cd step = EvalPoly(coef, roots[i]) / denom;
      roots[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * radius) break;
  }
  for (cd &r : roots)
    for (int it = 0; it < 3; ++it) r -= EvalPoly(coef, r) / EvalPoly(deriv, r);
  auto mag2 = [&](double w) {
    return coef[0] * coef[0] / std::norm(EvalPoly(coef, cd(0.0, w)));
  };
  double lo = 1e-3, hi = 1e3;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (mag2(mid) > 0.5 ? lo : hi) = mid;
  }
  const double w3 = std::sqrt(lo * hi);
  Zpk zpk;
  cd prod = 1.0;
  for (const cd &r : roots) {
    zpk.poles.push_back(r / w3);
    prod *= -r / w3;
  }
  zpk.gain = prod.real();
  return zpk;
}

// Elliptic prototype via Landen transformations of the Jacobi functions
// (Orfanidis' formulation).
constexpr int kLandenSteps = 7;

std::vector<double> Landen(double k) {
  std::vector<double> v;
  for (int n = 0; n < kLandenSteps; ++n) {
    k = std::pow(k / (1.0 + std::sqrt(1.0 - k * k)), 2);
    v.push_back(k);
  }
  return v;
}

cd Cde(cd u, double k) {
  const auto v = Landen(k);
  cd w = std::cos(u * kPi / 2.0);
  for (auto it = v.rbegin(); it != v.rend(); ++it)
    w = (1.0 + *it) * w / (1.0 + *it * w * w);
  return w;
}

cd Sne(cd u, double k) {
  const auto v = Landen(k);
  cd w = std::sin(u * kPi / 2.0);
  for (auto it = v.rbegin(); it != v.rend(); ++it)
    w = (1.0 + *it) * w / (1.0 + *it * w * w);
  return w;
}

double EllipK(double k) {
  double prod = kPi / 2.0;
  for (double v : Landen(k)) prod *= 1.0 + v;
  return prod;
}

double SymmetricRemainder(double x, double y) {
  return x - y * std::round(x / y);
}

cd Acde(cd w, double k) {
  const auto v = Landen(k);
  for (size_t n = 0; n < v.size(); ++n) {
    const double prev = n == 0 ? k : v[n - 1];
    w = w / (1.0 + std::sqrt(1.0 - w * w * prev * prev)) * 2.0 / (1.0 + v[n]);
  }
  const cd u = 2.0 / kPi * std::acos(w);
  const double ratio = EllipK(std::sqrt(1.0 - k * k)) / EllipK(k);
  return {SymmetricRemainder(u.real(), 4.0),
          SymmetricRemainder(u.imag(), 2.0 * ratio)};
}

cd Asne(cd w, double k) { return 1.0 - Acde(w, k); }

// Solves the degree equation for the selectivity modulus.
double EllipDeg(int n, double k1) {
  const double k1p = std::sqrt(1.0 - k1 * k1);
  double prod = 1.0;
  for (int i = 1; i <= n / 2; ++i)
    prod *= Sne((2.0 * i - 1.0) / n, k1p).real();
  const double kp = std::pow(k1p, n) * std::pow(prod, 4);
  return std::sqrt(1.0 - kp * kp);
}

Zpk Elliptic(int n, double ripple_db, double atten_db) {
  const double ep = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
  const double es = std::sqrt(std::pow(10.0, atten_db / 10.0) - 1.0);
  const double k1 = ep / es;
  const double k = EllipDeg(n, k1);
  const cd j(0.0, 1.0);
  const cd v0 = -j * Asne(j / ep, k1) / static_cast<double>(n);
  Zpk zpk;
  double num = 1.0, den = 1.0;
  for (int i = 1; i <= n / 2; ++i) {
    const double ui = (2.0 * i - 1.0) / n;
    const cd z = j / (k * Cde(ui, k));
    const cd p = j * Cde(ui - j * v0, k);
    zpk.zeros.push_back(z);
    zpk.zeros.push_back(std::conj(z));
    zpk.poles.push_back(p);
    zpk.poles.push_back(std::conj(p));
    num *= std::norm(z);
    den *= std::norm(p);
  }
  double dc = std::pow(10.0, -ripple_db / 20.0);
  if (n % 2 == 1) {
    const cd p0 = j * Sne(j * v0, k);
    zpk.poles.push_back(cd(p0.real(), 0.0));
    den *= -p0.real();
    dc = 1.0;
  }
  zpk.gain = dc * den / num;
  return zpk;
}

}  // namespace

Zpk AnalogPrototype(const LowpassDesign &design) {
  DMNET_CHECK(design.order >= 1 && design.order <= 16, kConfig,
              "filter order must lie in [1, 16], got " +
                  std::to_string(design.order));
  switch (design.family) {
    case FilterFamily::kButterworth: return Butterworth(design.order);
    case FilterFamily::kBessel: return Bessel(design.order);
    case FilterFamily::kChebyshev1:
      DMNET_CHECK(design.passband_ripple_db > 0, kConfig,
                  "passband ripple must be positive");
      return Chebyshev1(design.order, design.passband_ripple_db);
    case FilterFamily::kElliptic:
      DMNET_CHECK(design.passband_ripple_db > 0 &&
                      design.stopband_atten_db > design.passband_ripple_db,
                  kConfig, "elliptic design needs 0 < ripple < attenuation");
      return Elliptic(design.order, design.passband_ripple_db,
                      design.stopband_atten_db);
  }
  Throw(ErrorKind::kConfig, "unsupported filter family");
}

IirFilter::IirFilter(std::vector<Section> sections, double gain,
                     std::vector<std::complex<double>> poles)
    : sections_(std::move(sections)), gain_(gain), poles_(std::move(poles)) {}

std::vector<double> IirFilter::Apply(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  for (double &v : y) v *= gain_;
  for (const Section &s : sections_) {
    double z1 = 0.0, z2 = 0.0;
    for (double &v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::complex<double> IirFilter::Response(double freq_hz) const {
  const cd zinv = std::exp(cd(0.0, -2.0 * kPi * freq_hz / kSampleRate));
  cd h = gain_;
  for (const Section &s : sections_)
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
         (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  return h;
}

namespace {

// Splits roots into conjugate pairs (upper half plane representative) and
// real roots.
void SplitRoots(const std::vector<cd> &roots, std::vector<cd> *pairs,
                std::vector<double> *reals) {
  constexpr double kTol = 1e-10;
  for (const cd &r : roots) {
    if (std::abs(r.imag()) <= kTol * std::max(1.0, std::abs(r)))
      reals->push_back(r.real());
    else if (r.imag() > 0)
      pairs->push_back(r);
  }
}

}  // namespace

IirFilter DesignLowpass(const LowpassDesign &design) {
  const double nyquist = kSampleRate / 2.0;
  DMNET_CHECK(design.cutoff_hz > 0.0 && design.cutoff_hz < nyquist, kConfig,
              "cutoff must lie in (0, 8000) Hz, got " +
                  std::to_string(design.cutoff_hz));
  Zpk analog = AnalogPrototype(design);

  // Prewarp, scale the prototype edge, then map s -> z bilinearly.
  const double fs2 = 2.0 * kSampleRate;
  const double warped = fs2 * std::tan(kPi * design.cutoff_hz / kSampleRate);
  Zpk digital;
  cd num = 1.0, den = 1.0;
  for (const cd &z : analog.zeros) {
    const cd zs = z * warped;
    digital.zeros.push_back((fs2 + zs) / (fs2 - zs));
    num *= fs2 - zs;
  }
  for (const cd &p : analog.poles) {
    const cd ps = p * warped;
    digital.poles.push_back((fs2 + ps) / (fs2 - ps));
    den *= fs2 - ps;
  }
  const int excess =
      static_cast<int>(analog.poles.size() - analog.zeros.size());
  for (int i = 0; i < excess; ++i) digital.zeros.push_back(-1.0);
  digital.gain =
      (analog.gain * std::pow(warped, excess) * num / den).real();

  for (const cd &p : digital.poles)
    DMNET_CHECK(std::abs(p) < 1.0, kDesign,
                FilterFamilyName(design.family) + " order " +
                    std::to_string(design.order) + " at " +
                    std::to_string(design.cutoff_hz) +
                    " Hz has a pole outside the unit circle");

  std::vector<cd> pole_pairs, zero_pairs;
  std::vector<double> pole_reals, zero_reals;
  SplitRoots(digital.poles, &pole_pairs, &pole_reals);
  SplitRoots(digital.zeros, &zero_pairs, &zero_reals);
  // Poles closest to the unit circle go last, each pair taking the nearest
  // remaining zeros.
  std::sort(pole_pairs.begin(), pole_pairs.end(),
            [](const cd &a, const cd &b) { return std::abs(a) < std::abs(b); });

  auto take_zero_pair = [&](const cd &near, double *b1, double *b2) {
    if (!zero_pairs.empty()) {
      auto it = std::min_element(zero_pairs.begin(), zero_pairs.end(),
                                 [&](const cd &a, const cd &b) {
                                   return std::abs(a - near) < std::abs(b - near);
                                 });
      *b1 = -2.0 * it->real();
      *b2 = std::norm(*it);
      zero_pairs.erase(it);
    } else if (zero_reals.size() >= 2) {
      const double z1 = zero_reals.back();
      zero_reals.pop_back();
      const double z2 = zero_reals.back();
      zero_reals.pop_back();
      *b1 = -(z1 + z2);
      *b2 = z1 * z2;
    } else if (zero_reals.size() == 1) {
      *b1 = -zero_reals.back();
      *b2 = 0.0;
      zero_reals.pop_back();
    } else {
      *b1 = 0.0;
      *b2 = 0.0;
    }
  };

  std::vector<IirFilter::Section> sections;
  while (pole_reals.size() >= 2) {
    const double p1 = pole_reals.back();
    pole_reals.pop_back();
    const double p2 = pole_reals.back();
    pole_reals.pop_back();
    IirFilter::Section s{1.0, 0.0, 0.0, -(p1 + p2), p1 * p2};
    take_zero_pair(cd(p1, 0.0), &s.b1, &s.b2);
    sections.push_back(s);
  }
  if (!pole_reals.empty()) {
    IirFilter::Section s{1.0, 0.0, 0.0, -pole_reals.back(), 0.0};
    if (!zero_reals.empty()) {
      s.b1 = -zero_reals.back();
      zero_reals.pop_back();
    }
    sections.push_back(s);
  }
  for (const cd &p : pole_pairs) {
    IirFilter::Section s{1.0, 0.0, 0.0, -2.0 * p.real(), std::norm(p)};
    take_zero_pair(p, &s.b1, &s.b2);
    sections.push_back(s);
  }
  return IirFilter(std::move(sections), digital.gain, digital.poles);
}

Waveform Lowpass(const Waveform &x, const LowpassDesign &design) {
  DMNET_CHECK(x.sample_rate == kSampleRate, kData, "expected 16 kHz input");
  Waveform out = x;
  out.samples = DesignLowpass(design).Apply(x.samples);
  return out;
}

}  // namespace dmnet
