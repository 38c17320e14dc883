// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_OPTIM_H_
#define DMNET_OPTIM_H_

#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace dmnet {

struct AdamWOptions {
  double lr = 5e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with decoupled weight decay over named parameters. State is exposed
// as a flat named-tensor map so it can live in a checkpoint.
class AdamW {
 public:
  AdamW(const torch::OrderedDict<std::string, torch::Tensor> &params,
        const AdamWOptions &options);

  void ZeroGrad();
  // Parameters without a gradient are skipped.
  void Step();

  int64_t steps() const { return steps_; }
  AdamWOptions &options() { return options_; }

  std::map<std::string, torch::Tensor> State() const;
  void LoadState(const std::map<std::string, torch::Tensor> &state);

 private:
  struct Slot {
    std::string name;
    torch::Tensor param;
    torch::Tensor exp_avg;
    torch::Tensor exp_avg_sq;
  };
  std::vector<Slot> slots_;
  AdamWOptions options_;
  int64_t steps_ = 0;
};

// Scales all gradients so their global L2 norm is at most max_norm; returns
// the norm before clipping.
double ClipGradNorm(const std::vector<torch::Tensor> &params, double max_norm);

}  // namespace dmnet

#endif  // DMNET_OPTIM_H_
