// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_REPORT_H_
#define DMNET_REPORT_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace dmnet {

// Scores computed outside this package, merged from a sidecar file.
inline const std::vector<std::string> kExternalMetrics = {"csig", "cbak", "covl",
                                                          "pesq", "srmr"};

struct UtteranceScore {
  std::string id;
  double lsd_db = 0.0;
  std::optional<double> stoi;  // empty when the utterance is too short
  double si_sdr_db = 0.0;      // capped at kSiSdrCapDb
  double noisy_lsd_db = 0.0;   // from the manifest
  std::map<std::string, double> external;
};

struct MetricSummary {
  int64_t n = 0;
  double mean = 0.0;
  double ci95 = 0.0;  // half width, 1.96 * sd / sqrt(n)
};

MetricSummary Summarize(const std::vector<double> &values);

struct EvalOptions {
  std::string split;    // "train", "valid" or empty for all
  std::string sidecar;  // JSONL {"id": ..., "pesq": ...}; empty = none
};

struct EvalReport {
  std::vector<UtteranceScore> per_utterance;
  std::vector<std::string> missing;  // no restored file; excluded
  std::map<std::string, MetricSummary> aggregate;
  nlohmann::json config;
};

// Restored audio is looked up as <restored_dir>/<id>.wav.
EvalReport Evaluate(const std::string &manifest, const std::string &restored_dir,
                    const EvalOptions &options = {});

// Recomputes the aggregate block from per-utterance rows.
std::map<std::string, MetricSummary> Aggregate(
    const std::vector<UtteranceScore> &rows);

nlohmann::json ToJson(const UtteranceScore &s);
nlohmann::json ToJson(const EvalReport &r);

// Plain-text table; columns follow CSIG CBAK COVL PESQ STOI SRMR LSD, then
// SI-SDR. External columns without data print as "-".
std::string SummaryText(const EvalReport &r);

// Writes report.jsonl (one object per utterance, then the aggregate object)
// and summary.txt into out_dir.
void WriteReport(const EvalReport &r, const std::string &out_dir);

}  // namespace dmnet

#endif  // DMNET_REPORT_H_
