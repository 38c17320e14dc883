// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_CORPUS_H_
#define DMNET_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dmnet/distortion.h"

namespace dmnet {

// Audio list: a directory (all *.wav, sorted) or a text file with one path
// per line; relative lines resolve against the list file's directory.
std::vector<std::string> ResolveAudioList(const std::string &path);

// Speaker tag of an utterance file, e.g. "p258" for ".../p258_003.wav".
std::string SpeakerOf(const std::string &path);

struct CorpusConfig {
  std::string clean_list;
  std::string noise_list;
  int64_t count = 0;
  uint64_t seed = 0;
  DistortionRanges ranges;
  double dry_absorption = 0.99;  // clean target is the dry-room rendering
  std::vector<std::string> validation_speakers{"p258", "p287"};
  bool verify = false;
  VerifyTolerance tolerance;
  // Test hook: corrupt the SNR of one utterance by fault_snr_error_db.
  int64_t fault_index = -1;
  double fault_snr_error_db = 0.0;
};

void to_json(nlohmann::json &j, const CorpusConfig &c);
// Rejects unknown keys.
void from_json(const nlohmann::json &j, CorpusConfig &c);

struct CorpusEntry {
  std::string id;
  std::string clean_path;     // relative to the manifest directory
  std::string degraded_path;  // relative to the manifest directory
  std::string source_path;    // original clean utterance
  std::string noise_path;
  std::string split;          // "train" or "valid"
  DistortionSpec spec;
  double noisy_lsd_db = 0.0;  // LSD(target, degraded) on the written audio
  bool verified = false;
  VerificationReport verification;
};

void to_json(nlohmann::json &j, const CorpusEntry &e);
void from_json(const nlohmann::json &j, CorpusEntry &e);

struct CorpusResult {
  std::vector<CorpusEntry> entries;
  std::string manifest_path;
  int64_t skipped = 0;
  std::vector<std::string> failed_ids;  // verification failures
};

// Writes out_dir/{clean,degraded}/<id>.wav and out_dir/manifest.jsonl.
CorpusResult BuildCorpus(const CorpusConfig &config, const std::string &out_dir);

std::vector<CorpusEntry> ReadManifest(const std::string &path);

// Absolute location of a manifest-relative path.
std::string ManifestPath(const std::string &manifest, const std::string &rel);

}  // namespace dmnet

#endif  // DMNET_CORPUS_H_
