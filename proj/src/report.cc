// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dmnet/corpus.h"
#include "dmnet/error.h"
#include "dmnet/log.h"
#include "dmnet/metrics.h"
#include "dmnet/wav.h"

namespace dmnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Range {
  double lo, hi;
};

// Valid ranges of the external scores (PESQ is the wideband MOS-LQO scale).
const std::map<std::string, Range> kExternalRanges = {
    {"csig", {1.0, 5.0}}, {"cbak", {1.0, 5.0}}, {"covl", {1.0, 5.0}},
    {"pesq", {-0.5, 4.64}}, {"srmr", {0.0, 1e6}}};

std::map<std::string, std::map<std::string, double>> ReadSidecar(
    const std::string &path) {
  std::ifstream is(path);
  DMNET_CHECK(is.good(), kData, "cannot open sidecar " + path);
  std::map<std::string, std::map<std::string, double>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      Throw(ErrorKind::kData, where + ": " + e.what());
    }
    DMNET_CHECK(j.is_object() && j.contains("id") && j["id"].is_string(), kData,
                where + ": sidecar rows need a string id");
    auto &row = out[j["id"].get<std::string>()];
    for (const auto &[key, value] : j.items()) {
      if (key == "id") continue;
      auto it = kExternalRanges.find(key);
      DMNET_CHECK(it != kExternalRanges.end(), kData,
                  where + ": unknown sidecar column '" + key + "'");
      DMNET_CHECK(value.is_number(), kData, where + ": " + key + " is not a number");
      const double v = value.get<double>();
      DMNET_CHECK(v >= it->second.lo && v <= it->second.hi, kData,
                  where + ": " + key + " out of range");
      row[key] = v;
    }
  }
  return out;
}

json SummaryJson(const MetricSummary &s) {
  return json{{"n", s.n}, {"mean", s.mean}, {"ci95", s.ci95}};
}

}  // namespace

MetricSummary Summarize(const std::vector<double> &values) {
  MetricSummary s;
  s.n = static_cast<int64_t>(values.size());
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.ci95 = 1.96 * std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

std::map<std::string, MetricSummary> Aggregate(
    const std::vector<UtteranceScore> &rows) {
  std::map<std::string, std::vector<double>> cols;
  for (const auto &r : rows) {
    cols["lsd_db"].push_back(r.lsd_db);
    cols["si_sdr_db"].push_back(r.si_sdr_db);
    cols["noisy_lsd_db"].push_back(r.noisy_lsd_db);
    if (r.stoi) cols["stoi"].push_back(*r.stoi);
    for (const auto &[k, v] : r.external) cols[k].push_back(v);
  }
  std::map<std::string, MetricSummary> out;
  for (const auto &[k, v] : cols) out[k] = Summarize(v);
  return out;
}

EvalReport Evaluate(const std::string &manifest, const std::string &restored_dir,
                    const EvalOptions &options) {
  DMNET_CHECK(options.split.empty() || options.split == "train" ||
                  options.split == "valid",
              kConfig, "split must be train, valid or empty");
  auto entries = ReadManifest(manifest);
  if (!options.split.empty()) {
    std::erase_if(entries, [&](const CorpusEntry &e) { return e.split != options.split; });
  }
  DMNET_CHECK(!entries.empty(), kData, "manifest " + manifest + " has no utterances");
  std::map<std::string, std::map<std::string, double>> sidecar;
  if (!options.sidecar.empty()) sidecar = ReadSidecar(options.sidecar);

  EvalReport report;
  for (const auto &e : entries) {
    const auto restored = (fs::path(restored_dir) / (e.id + ".wav")).string();
    if (!fs::exists(restored)) {
      report.missing.push_back(e.id);
      continue;
    }
    const auto clean = ReadWav(ManifestPath(manifest, e.clean_path));
    const auto est = ReadWav(restored);
    DMNET_CHECK(clean.size() == est.size(), kDimension,
                e.id + ": restored length " + std::to_string(est.size()) +
                    " != clean length " + std::to_string(clean.size()));
    UtteranceScore s;
    s.id = e.id;
    s.lsd_db = Lsd(clean, est);
    s.si_sdr_db = SiSdr(clean, est);
    s.noisy_lsd_db = e.noisy_lsd_db;
    try {
      s.stoi = Stoi(clean, est);
    } catch (const Error &err) {
      if (err.kind() != ErrorKind::kDimension) throw;
      LOG_WARN << e.id << ": no STOI (" << err.what() << ")";
    }
    if (auto it = sidecar.find(e.id); it != sidecar.end()) s.external = it->second;
    report.per_utterance.push_back(std::move(s));
  }
  for (const auto &id : report.missing) LOG_WARN << "missing restored file for " << id;
  report.aggregate = Aggregate(report.per_utterance);
  report.config = json{{"manifest", manifest},
                       {"restored_dir", restored_dir},
                       {"split", options.split.empty() ? "all" : options.split},
                       {"sidecar", options.sidecar},
                       {"lsd", {{"n_fft", kLsdFft}, {"hop", kLsdHop},
                                {"window", "hann"}, {"floor", kLsdFloor}}},
                       {"si_sdr_cap_db", kSiSdrCapDb}};
  return report;
}

json ToJson(const UtteranceScore &s) {
  json j{{"id", s.id},
         {"lsd_db", s.lsd_db},
         {"stoi", s.stoi ? json(*s.stoi) : json(nullptr)},
         {"si_sdr_db", s.si_sdr_db},
         {"noisy_lsd_db", s.noisy_lsd_db}};
  for (const auto &[k, v] : s.external) j[k] = v;
  return j;
}

json ToJson(const EvalReport &r) {
  json agg = json::object();
  for (const auto &[k, v] : r.aggregate) agg[k] = SummaryJson(v);
  json rows = json::array();
  for (const auto &s : r.per_utterance) rows.push_back(ToJson(s));
  return json{{"per_utterance", rows},
              {"aggregate", agg},
              {"missing", r.missing},
              {"config", r.config}};
}

std::string SummaryText(const EvalReport &r) {
  const std::vector<std::pair<std::string, std::string>> cols = {
      {"csig", "CSIG"}, {"cbak", "CBAK"}, {"covl", "COVL"}, {"pesq", "PESQ"},
      {"stoi", "STOI"}, {"srmr", "SRMR"}, {"lsd_db", "LSD"},
      {"si_sdr_db", "SI-SDR"}};
  std::ostringstream os;
  os << "# LSD: " << kLsdFft << "-point Hann STFT, hop " << kLsdHop
     << ", power floor " << kLsdFloor << "; SI-SDR capped at " << kSiSdrCapDb
     << " dB\n";
  os << "# utterances: " << r.per_utterance.size() << " scored, "
     << r.missing.size() << " missing\n";
  char buf[64];
  std::string head, mean, ci;
  for (const auto &[key, name] : cols) {
    std::snprintf(buf, sizeof(buf), "%16s", name.c_str());
    head += buf;
    auto it = r.aggregate.find(key);
    if (it == r.aggregate.end() || it->second.n == 0) {
      std::snprintf(buf, sizeof(buf), "%16s", "-");
      mean += buf;
      ci += buf;
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%16.4f", it->second.mean);
    mean += buf;
    std::snprintf(buf, sizeof(buf), "%16.4f", it->second.ci95);
    ci += buf;
  }
  os << "      " << head << "\nmean  " << mean << "\n+-95% " << ci << "\n";
  if (auto it = r.aggregate.find("noisy_lsd_db"); it != r.aggregate.end())
    os << "degraded input LSD: " << it->second.mean << " dB\n";
  for (const auto &id : r.missing) os << "missing: " << id << "\n";
  return os.str();
}

void WriteReport(const EvalReport &r, const std::string &out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "report.jsonl");
    for (const auto &s : r.per_utterance) os << ToJson(s).dump() << '\n';
    json agg = json::object();
    for (const auto &[k, v] : r.aggregate) agg[k] = SummaryJson(v);
    os << json{{"aggregate", agg}, {"missing", r.missing}, {"config", r.config}}.dump()
       << '\n';
    DMNET_CHECK(os.good(), kData, "cannot write report to " + out_dir);
  }
  std::ofstream(fs::path(out_dir) / "summary.txt") << SummaryText(r);
}

}  // namespace dmnet
