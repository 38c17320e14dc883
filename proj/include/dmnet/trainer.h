// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_TRAINER_H_
#define DMNET_TRAINER_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "dmnet/corpus.h"
#include "dmnet/losses.h"
#include "dmnet/model.h"
#include "json.hpp"

namespace dmnet {

struct TrainConfig {
  double lr = 5e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 0.01;
  int64_t steps = 10000;
  int batch_size = 2;
  double segment_s = 2.0;       // random crop length
  LossWeights loss_weights;
  uint64_t seed = 0;
  int64_t checkpoint_every = 1000;
  int64_t log_every = 100;      // console progress only; the file log has every step
  double grad_clip = 5.0;
  int64_t warmup_steps = 0;     // linear warmup, 0 = constant lr

  void Validate() const;
};

void to_json(nlohmann::json &j, const TrainConfig &c);
// Rejects unknown keys and validates.
void from_json(const nlohmann::json &j, TrainConfig &c);

struct StepLog {
  int64_t step = 0;
  double lr = 0.0;
  double total = 0.0;
  double mag = 0.0;
  double phase = 0.0;
  double complex = 0.0;
  double time = 0.0;
  double consistency = 0.0;
  double grad_norm = 0.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();  // DM2 only

  std::string Line() const;  // tab-separated, full precision
};

// In-memory training pairs (split == "train") of a corpus manifest.
class TrainData {
 public:
  TrainData(const std::string &manifest, int64_t min_length);

  int64_t size() const { return static_cast<int64_t>(clean_.size()); }
  int64_t max_length() const { return max_length_; }
  const std::vector<std::string> &ids() const { return ids_; }

  struct Batch {
    torch::Tensor degraded;  // [B, L], level-normalized
    torch::Tensor clean;     // [B, L], same gain as degraded
    std::vector<int64_t> items;
  };
  // Deterministic function of (seed, step).
  Batch Sample(uint64_t seed, int64_t step, int batch_size, int64_t segment,
               torch::Dtype dtype) const;

 private:
  std::vector<std::vector<double>> clean_, degraded_;
  std::vector<std::string> ids_;
  int64_t max_length_ = 0;
};

struct TrainOptions {
  std::string resume;        // checkpoint file or run directory; empty = fresh
  int64_t stop_after = -1;   // test hook: return after this step
  int64_t inject_nan_at = -1;  // test hook: poison the loss at this step
  std::function<void(const StepLog &)> on_step;
};

struct TrainResult {
  std::string last_checkpoint;
  int64_t final_step = 0;
  std::vector<StepLog> log;  // steps run in this call
};

inline constexpr const char *kTrainLogName = "train_log.tsv";

std::string CheckpointName(int64_t step);
// Highest-step checkpoint in a run directory ("" if none).
std::string LatestCheckpoint(const std::string &dir);

// Named starting points for config documents. "full" is the full-size model
// with the default optimizer settings; "tiny" is the small network used for
// overfitting and end-to-end checks on one core.
struct Preset {
  ModelConfig model;
  TrainConfig train;
};
Preset GetPreset(const std::string &name, Variant variant);
inline const std::vector<std::string> kPresetNames = {"full", "tiny"};

// Seeded, resumable loop. Writes out_dir/train_log.tsv and
// out_dir/checkpoint_<step>.ckpt (step 0, every checkpoint_every, last).
// Non-finite loss: snapshot + diagnostics in out_dir, then a numeric error.
TrainResult Train(const ModelConfig &model_cfg, const TrainConfig &train_cfg,
                  const std::string &manifest, const std::string &out_dir,
                  const TrainOptions &options = {});

}  // namespace dmnet

#endif  // DMNET_TRAINER_H_
