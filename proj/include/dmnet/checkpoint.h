// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_CHECKPOINT_H_
#define DMNET_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "dmnet/model.h"
#include "json.hpp"

namespace dmnet {

// File layout: "DMNETCKP", u32 version, u64 header size, JSON header, then
// the raw little-endian bytes of every tensor at the offsets listed in the
// header. Integrity is checked against the stored config hash.
struct Checkpoint {
  nlohmann::json model_config;
  nlohmann::json train_config;   // may be null
  std::string variant;
  int64_t step = 0;
  bool has_alpha = false;
  double alpha = 0.0;
  std::vector<std::pair<int64_t, double>> alpha_trajectory;
  std::string manifest_hash;     // hex, empty if unknown
  std::map<std::string, torch::Tensor> model;
  std::map<std::string, torch::Tensor> optimizer;  // may be empty
};

// FNV-1a 64 of the canonical (sorted-key, compact) JSON dump, as hex.
std::string ConfigHash(const nlohmann::json &config);
std::string Fnv1aHex(const std::string &bytes);

// Writes path.tmp then renames over path.
void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint LoadCheckpoint(const std::string &path);

// Snapshot of a model's parameters (detached clones).
std::map<std::string, torch::Tensor> ModelState(torch::nn::Module &model);

// Builds the model recorded in ckpt. When expected is given its hash must
// match the stored config; a mismatch is a checkpoint error.
DmNet LoadModel(const Checkpoint &ckpt, const ModelConfig *expected = nullptr);
void LoadModelState(torch::nn::Module &model,
                    const std::map<std::string, torch::Tensor> &state);

}  // namespace dmnet

#endif  // DMNET_CHECKPOINT_H_
