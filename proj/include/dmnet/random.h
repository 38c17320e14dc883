// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_RANDOM_H_
#define DMNET_RANDOM_H_

#include <cstdint>
#include <random>

namespace dmnet {

// Seeded generator whose output sequence is fixed by the seed alone.
// std::mt19937_64 is specified bit-exactly by the standard; the
// distribution mappings below are written out so that they do not depend on
// the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer on [lo, hi].
  int64_t UniformInt(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(engine_() % span);
  }

  // Standard normal (Box-Muller, one draw per call).
  double Normal();

 private:
  std::mt19937_64 engine_;
};

// Stateless mixing of (seed, stream) into a fresh seed (splitmix64).
uint64_t MixSeed(uint64_t seed, uint64_t stream);

}  // namespace dmnet

#endif  // DMNET_RANDOM_H_
