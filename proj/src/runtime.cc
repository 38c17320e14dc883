// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/runtime.h"

#include <cstdlib>
#include <string>

namespace dmnet {

bool DeterministicMode() {
  const char *v = std::getenv(kDeterministicEnv);
  if (v == nullptr) return false;
  const std::string s(v);
  return !(s.empty() || s == "0" || s == "false");
}

torch::Dtype ComputeDtype() {
  return DeterministicMode() ? torch::kFloat64 : torch::kFloat32;
}

void ApplyRuntimeSettings() {
  if (DeterministicMode()) {
    torch::set_num_threads(1);
  }
}

}  // namespace dmnet
