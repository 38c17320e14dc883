// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/optim.h"

#include <cmath>

#include "dmnet/error.h"

namespace dmnet {

AdamW::AdamW(const torch::OrderedDict<std::string, torch::Tensor> &params,
             const AdamWOptions &options)
    : options_(options) {
  DMNET_CHECK(options.lr >= 0.0, kConfig, "learning rate must be >= 0");
  DMNET_CHECK(options.beta1 >= 0.0 && options.beta1 < 1.0 && options.beta2 >= 0.0 &&
                  options.beta2 < 1.0,
              kConfig, "betas must lie in [0, 1)");
  for (const auto &item : params) {
    slots_.push_back({item.key(), item.value(),
                      torch::zeros_like(item.value()),
                      torch::zeros_like(item.value())});
  }
}

void AdamW::ZeroGrad() {
  for (auto &s : slots_) {
    if (s.param.grad().defined()) s.param.mutable_grad().zero_();
  }
}

void AdamW::Step() {
  torch::NoGradGuard no_grad;
  ++steps_;
  const double lr = options_.lr;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (auto &s : slots_) {
    const auto &g = s.param.grad();
    if (!g.defined()) continue;
    s.param.mul_(1.0 - lr * options_.weight_decay);
    s.exp_avg.mul_(b1).add_(g, 1.0 - b1);
    s.exp_avg_sq.mul_(b2).addcmul_(g, g, 1.0 - b2);
    auto denom = (s.exp_avg_sq / bc2).sqrt_().add_(options_.eps);
    s.param.addcdiv_(s.exp_avg, denom, -lr / bc1);
  }
}

std::map<std::string, torch::Tensor> AdamW::State() const {
  std::map<std::string, torch::Tensor> out;
  for (const auto &s : slots_) {
    out["exp_avg/" + s.name] = s.exp_avg;
    out["exp_avg_sq/" + s.name] = s.exp_avg_sq;
  }
  out["steps"] = torch::tensor({steps_}, torch::kLong);
  return out;
}

void AdamW::LoadState(const std::map<std::string, torch::Tensor> &state) {
  torch::NoGradGuard no_grad;
  auto it = state.find("steps");
  DMNET_CHECK(it != state.end(), kCheckpoint, "optimizer state lacks a step count");
  steps_ = it->second.item<int64_t>();
  for (auto &s : slots_) {
    for (auto [prefix, dst] : {std::pair{"exp_avg/", &s.exp_avg},
                               std::pair{"exp_avg_sq/", &s.exp_avg_sq}}) {
      auto f = state.find(prefix + s.name);
      DMNET_CHECK(f != state.end() && f->second.sizes() == dst->sizes(), kCheckpoint,
                  "optimizer state missing or mismatched for " + s.name);
      dst->copy_(f->second);
    }
  }
}

double ClipGradNorm(const std::vector<torch::Tensor> &params, double max_norm) {
  torch::NoGradGuard no_grad;
  double total = 0.0;
  for (const auto &p : params) {
    if (p.grad().defined()) total += p.grad().to(torch::kFloat64).square().sum().item<double>();
  }
  total = std::sqrt(total);
  if (max_norm > 0.0 && total > max_norm) {
    const double scale = max_norm / (total + 1e-6);
    for (const auto &p : params)
      if (p.grad().defined()) p.grad().mul_(scale);
  }
  return total;
}

}  // namespace dmnet
