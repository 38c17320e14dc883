// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_ROOM_H_
#define DMNET_ROOM_H_

#include <array>
#include <vector>

namespace dmnet {

using Vec3 = std::array<double, 3>;

struct ShoeboxRoom {
  Vec3 dims{6.0, 5.0, 3.0};  // length, width, height in meters
  Vec3 source{2.0, 2.0, 1.5};
  Vec3 mic{4.0, 3.0, 1.5};
};

struct ImageSourceOptions {
  double sound_speed = 343.0;       // m/s
  double truncation_db = 75.0;      // tail and image cut relative to direct
  int fractional_half_width = 16;   // windowed-sinc taps on each side
  // Response duration after the direct path; <= 0 derives it from the
  // Eyring RT60 of the absorption as rt60 * truncation_db / 60.
  double duration_s = 0.0;
};

// Throws a geometry error unless source and mic are inside the room with at
// least `clearance` meters to every wall.
void ValidateGeometry(const ShoeboxRoom &room, double clearance = 0.3);

double RoomVolume(const Vec3 &dims);
double RoomSurface(const Vec3 &dims);

// Uniform wall absorption coefficient that yields `rt60_s` under Eyring's
// formula, and the inverse relation.
double EyringAbsorption(const Vec3 &dims, double rt60_s);
double EyringRt60(const Vec3 &dims, double absorption);

struct ImpulseResponse {
  std::vector<double> taps;  // 16 kHz, direct path normalized to unit gain
  int direct_delay = 0;      // sample index of the direct-path arrival
};

// Shoebox image-source response with one absorption coefficient for all six
// walls (reflection coefficient sqrt(1 - absorption)). The response is cut
// once the Eyring decay has fallen truncation_db below the direct path, and
// images whose amplitude is already that far down are skipped.
ImpulseResponse ImageSourceRir(const ShoeboxRoom &room, double absorption,
                               const ImageSourceOptions &options = {});

// Specular reflections in a shoebox decay more slowly than the diffuse-field
// Eyring prediction, most visibly in flat rooms. Starting from the Eyring
// absorption, this refines the uniform absorption until the Schroeder RT60
// of the simulated response is within `rel_tol` of the target.
struct CalibratedAbsorption {
  double absorption = 0.0;
  double eyring_absorption = 0.0;
  double measured_rt60_s = 0.0;
  int iterations = 0;
};
CalibratedAbsorption CalibrateAbsorption(const ShoeboxRoom &room,
                                         double rt60_s,
                                         const ImageSourceOptions &options = {},
                                         double rel_tol = 0.02);

}  // namespace dmnet

#endif  // DMNET_ROOM_H_
