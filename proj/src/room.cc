// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/room.h"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "dmnet/error.h"
#include "dmnet/metrics.h"
#include "dmnet/wav.h"

namespace dmnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSabineConstant = 0.161;  // s/m, 24 ln(10) / 343
constexpr int kFracSteps = 256;

// Hann-windowed sinc taps for fractional delays f = q / kFracSteps.
class FractionalDelayTable {
 public:
  explicit FractionalDelayTable(int half_width)
      : half_width_(half_width),
        taps_((kFracSteps + 1) * 2 * half_width) {
    for (int q = 0; q <= kFracSteps; ++q) {
      const double f = static_cast<double>(q) / kFracSteps;
      for (int i = -half_width + 1; i <= half_width; ++i) {
        const double x = i - f;
        const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
        const double win = 0.5 * (1.0 + std::cos(kPi * x / half_width));
        taps_[q * 2 * half_width + (i + half_width - 1)] = sinc * win;
      }
    }
  }
  // Taps for sample offsets -half_width+1 .. half_width.
  const double *Row(int q) const { return &taps_[q * 2 * half_width_]; }

 private:
  int half_width_;
  std::vector<double> taps_;
};

std::string FormatVec(const Vec3 &v) {
  return "(" + std::to_string(v[0]) + ", " + std::to_string(v[1]) + ", " +
         std::to_string(v[2]) + ")";
}

}  // namespace

void ValidateGeometry(const ShoeboxRoom &room, double clearance) {
  for (int a = 0; a < 3; ++a) {
    DMNET_CHECK(room.dims[a] > 2.0 * clearance, kGeometry,
                "room " + FormatVec(room.dims) + " is too small");
    for (const Vec3 *p : {&room.source, &room.mic}) {
      DMNET_CHECK((*p)[a] >= clearance && (*p)[a] <= room.dims[a] - clearance,
                  kGeometry,
                  "point " + FormatVec(*p) + " is closer than " +
                      std::to_string(clearance) + " m to a wall of room " +
                      FormatVec(room.dims));
    }
  }
}

double RoomVolume(const Vec3 &d) { return d[0] * d[1] * d[2]; }

double RoomSurface(const Vec3 &d) {
  return 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
}

double EyringAbsorption(const Vec3 &dims, double rt60_s) {
  DMNET_CHECK(rt60_s > 0.0, kConfig, "RT60 must be positive");
  return 1.0 - std::exp(-kSabineConstant * RoomVolume(dims) /
                        (RoomSurface(dims) * rt60_s));
}

double EyringRt60(const Vec3 &dims, double absorption) {
  DMNET_CHECK(absorption > 0.0 && absorption < 1.0, kConfig,
              "absorption must lie in (0, 1)");
  return kSabineConstant * RoomVolume(dims) /
         (-RoomSurface(dims) * std::log(1.0 - absorption));
}

ImpulseResponse ImageSourceRir(const ShoeboxRoom &room, double absorption,
                               const ImageSourceOptions &options) {
  ValidateGeometry(room, 0.0);
  const double beta = std::sqrt(1.0 - absorption);
  const double fs = kSampleRate;
  const double c = options.sound_speed;
  const int hw = options.fractional_half_width;
  static thread_local std::unique_ptr<FractionalDelayTable> table;
  static thread_local int table_width = 0;
  if (!table || table_width != hw) {
    table = std::make_unique<FractionalDelayTable>(hw);
    table_width = hw;
  }

  const Vec3 &s = room.source, &r = room.mic, &dims = room.dims;
  const double direct = std::sqrt((s[0] - r[0]) * (s[0] - r[0]) +
                                  (s[1] - r[1]) * (s[1] - r[1]) +
                                  (s[2] - r[2]) * (s[2] - r[2]));
  DMNET_CHECK(direct > 0.0, kGeometry, "source and mic coincide");
  const double decay_s =
      options.duration_s > 0.0
          ? options.duration_s
          : EyringRt60(dims, absorption) * options.truncation_db / 60.0;
  const int length =
      static_cast<int>(std::ceil(fs * (direct / c + decay_s))) + hw + 1;
  const double max_dist = c * length / fs;
  const double min_gain = std::pow(10.0, -options.truncation_db / 20.0);

  // beta^n for every reflection count the loop can reach.
  int n_img[3];
  for (int a = 0; a < 3; ++a)
    n_img[a] = static_cast<int>(std::ceil(max_dist / (2.0 * dims[a]))) + 1;
  std::vector<double> beta_pow(2 * (n_img[0] + n_img[1] + n_img[2]) + 8, 1.0);
  for (size_t i = 1; i < beta_pow.size(); ++i)
    beta_pow[i] = beta_pow[i - 1] * beta;

  ImpulseResponse out;
  out.taps.assign(length, 0.0);
  for (int mx = -n_img[0]; mx <= n_img[0]; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double dx = (1 - 2 * qx) * s[0] - r[0] + 2.0 * mx * dims[0];
      const int rx = std::abs(mx - qx) + std::abs(mx);
      if (std::abs(dx) > max_dist) continue;
      for (int my = -n_img[1]; my <= n_img[1]; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double dy = (1 - 2 * qy) * s[1] - r[1] + 2.0 * my * dims[1];
          const int ry = std::abs(my - qy) + std::abs(my);
          const double dxy2 = dx * dx + dy * dy;
          if (dxy2 > max_dist * max_dist) continue;
          for (int mz = -n_img[2]; mz <= n_img[2]; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double dz =
                  (1 - 2 * qz) * s[2] - r[2] + 2.0 * mz * dims[2];
              const int rz = std::abs(mz - qz) + std::abs(mz);
              const double dist = std::sqrt(dxy2 + dz * dz);
              if (dist > max_dist) continue;
              // Gain relative to the direct path (which is normalized to 1).
              const double gain = beta_pow[rx + ry + rz] * direct / dist;
              if (gain < min_gain) continue;
              const double delay = dist / c * fs;
              const int n0 = static_cast<int>(std::floor(delay));
              const int q = static_cast<int>(
                  std::lround((delay - n0) * kFracSteps));
              const double *row = table->Row(q);
              for (int i = -hw + 1; i <= hw; ++i) {
                const int t = n0 + i;
                if (t < 0 || t >= length) continue;
                out.taps[t] += gain * row[i + hw - 1];
              }
            }
          }
        }
      }
    }
  }
  out.direct_delay = static_cast<int>(std::lround(direct / c * fs));
  return out;
}

CalibratedAbsorption CalibrateAbsorption(const ShoeboxRoom &room,
                                         double rt60_s,
                                         const ImageSourceOptions &options,
                                         double rel_tol) {
  constexpr int kMaxIterations = 12;
  constexpr double kMaxAbsorption = 0.999;
  CalibratedAbsorption out;
  out.eyring_absorption = EyringAbsorption(room.dims, rt60_s);
  ImageSourceOptions opts = options;
  opts.duration_s = rt60_s * options.truncation_db / 60.0;
  double a = out.eyring_absorption;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const auto rir = ImageSourceRir(room, a, opts);
    const double measured = Rt60Schroeder(rir.taps);
    out.absorption = a;
    out.measured_rt60_s = measured;
    out.iterations = it;
    const double ratio = measured / rt60_s;
    if (std::abs(ratio - 1.0) <= rel_tol) break;
    // RT60 scales roughly with 1 / -ln(1 - a).
    const double decay = -std::log(1.0 - a) * ratio;
    a = std::min(kMaxAbsorption, 1.0 - std::exp(-decay));
  }
  return out;
}

}  // namespace dmnet
