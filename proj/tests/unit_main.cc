// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest_torch.h"

#include <torch/torch.h>

#include "dmnet/log.h"

int main(int argc, char **argv) {
  dmnet::SetLogLevel(dmnet::LogLevel::kError);
  torch::set_num_threads(1);
  doctest::Context context(argc, argv);
  return context.run();
}
