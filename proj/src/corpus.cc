// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/corpus.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dmnet/error.h"
#include "dmnet/log.h"
#include "dmnet/metrics.h"

namespace dmnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> ResolveAudioList(const std::string &path) {
  std::vector<std::string> out;
  if (fs::is_directory(path)) {
    for (const auto &e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".wav")
        out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  std::ifstream is(path);
  DMNET_CHECK(is.good(), kData, "cannot open audio list " + path);
  const fs::path base = fs::path(path).parent_path();
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fs::path p(line);
    out.push_back(p.is_absolute() ? p.string() : (base / p).string());
  }
  return out;
}

std::string SpeakerOf(const std::string &path) {
  const std::string stem = fs::path(path).stem().string();
  return stem.substr(0, stem.find('_'));
}

void to_json(json &j, const CorpusConfig &c) {
  j = json{{"clean_list", c.clean_list},
           {"noise_list", c.noise_list},
           {"count", c.count},
           {"seed", c.seed},
           {"distortion", c.ranges},
           {"dry_absorption", c.dry_absorption},
           {"validation_speakers", c.validation_speakers},
           {"verify", c.verify},
           {"tolerance", {{"snr_db", c.tolerance.snr_db},
                          {"rt60_rel", c.tolerance.rt60_rel},
                          {"bandwidth_rel", c.tolerance.bandwidth_rel}}},
           {"fault_index", c.fault_index},
           {"fault_snr_error_db", c.fault_snr_error_db}};
}

void from_json(const json &j, CorpusConfig &c) {
  static const char *kKeys[] = {"clean_list", "noise_list", "count", "seed",
                                "distortion", "dry_absorption",
                                "validation_speakers", "verify", "tolerance",
                                "fault_index", "fault_snr_error_db"};
  DMNET_CHECK(j.is_object(), kConfig, "simulate config must be an object");
  for (const auto &[key, _] : j.items()) {
    DMNET_CHECK(std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys),
                kConfig, "unknown simulate key '" + key + "'");
  }
  CorpusConfig d;
  d.clean_list = j.value("clean_list", d.clean_list);
  d.noise_list = j.value("noise_list", d.noise_list);
  d.count = j.value("count", d.count);
  d.seed = j.value("seed", d.seed);
  if (j.contains("distortion")) d.ranges = j.at("distortion").get<DistortionRanges>();
  d.dry_absorption = j.value("dry_absorption", d.dry_absorption);
  d.validation_speakers = j.value("validation_speakers", d.validation_speakers);
  d.verify = j.value("verify", d.verify);
  if (j.contains("tolerance")) {
    const auto &t = j.at("tolerance");
    for (const auto &[key, _] : t.items()) {
      DMNET_CHECK(key == "snr_db" || key == "rt60_rel" || key == "bandwidth_rel",
                  kConfig, "unknown tolerance key '" + key + "'");
    }
    d.tolerance.snr_db = t.value("snr_db", d.tolerance.snr_db);
    d.tolerance.rt60_rel = t.value("rt60_rel", d.tolerance.rt60_rel);
    d.tolerance.bandwidth_rel = t.value("bandwidth_rel", d.tolerance.bandwidth_rel);
  }
  d.fault_index = j.value("fault_index", d.fault_index);
  d.fault_snr_error_db = j.value("fault_snr_error_db", d.fault_snr_error_db);
  DMNET_CHECK(d.count >= 0, kConfig, "count must be >= 0");
  DMNET_CHECK(d.dry_absorption > 0.0 && d.dry_absorption < 1.0, kConfig,
              "dry_absorption must lie in (0, 1)");
  c = d;
}

void to_json(json &j, const CorpusEntry &e) {
  j = json{{"id", e.id},
           {"clean_path", e.clean_path},
           {"degraded_path", e.degraded_path},
           {"split", e.split},
           {"source_path", e.source_path},
           {"noise_path", e.noise_path},
           {"spec", e.spec},
           {"noisy_lsd_db", e.noisy_lsd_db}};
  if (e.verified) j["verification"] = e.verification;
}

void from_json(const json &j, CorpusEntry &e) {
  CorpusEntry d;
  d.id = j.at("id").get<std::string>();
  d.clean_path = j.at("clean_path").get<std::string>();
  d.degraded_path = j.at("degraded_path").get<std::string>();
  d.split = j.value("split", std::string("train"));
  d.source_path = j.value("source_path", std::string());
  d.noise_path = j.value("noise_path", std::string());
  if (j.contains("spec")) d.spec = j.at("spec").get<DistortionSpec>();
  d.noisy_lsd_db = j.value("noisy_lsd_db", 0.0);
  e = d;
}

namespace {

// Repeats a short noise recording until it covers n samples.
Waveform Tile(const Waveform &noise, int64_t n) {
  if (noise.size() >= n) return noise;
  Waveform out = noise;
  out.samples.resize(n);
  for (int64_t i = noise.size(); i < n; ++i)
    out.samples[i] = noise.samples[i % noise.size()];
  return out;
}

}  // namespace

CorpusResult BuildCorpus(const CorpusConfig &config, const std::string &out_dir) {
  CorpusResult result;
  fs::create_directories(out_dir);
  result.manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  std::vector<std::string> lines;

  if (config.count > 0) {
    const auto clean_files = ResolveAudioList(config.clean_list);
    const auto noise_files = ResolveAudioList(config.noise_list);
    DMNET_CHECK(!clean_files.empty(), kData, "clean list is empty");
    std::vector<Waveform> noises;
    std::vector<std::string> noise_paths;
    for (const auto &p : noise_files) {
      try {
        noises.push_back(ReadWav(p));
        noise_paths.push_back(p);
      } catch (const Error &e) {
        LOG_WARN << "skipping noise " << p << ": " << e.what();
      }
    }
    DMNET_CHECK(!noises.empty() || !config.ranges.noise, kData,
                "no readable noise files");
    fs::create_directories(fs::path(out_dir) / "clean");
    fs::create_directories(fs::path(out_dir) / "degraded");

    for (int64_t i = 0; i < config.count; ++i) {
      const std::string &src = clean_files[i % clean_files.size()];
      Waveform clean;
      try {
        clean = ReadWav(src);
        DMNET_CHECK(clean.size() > 0, kData, "empty file");
      } catch (const Error &e) {
        LOG_WARN << "skipping " << src << ": " << e.what();
        ++result.skipped;
        continue;
      }
      Rng rng(config.seed ^ static_cast<uint64_t>(i));
      DistortionSpec spec = SampleDistortion(config.ranges, &rng);
      Waveform noise;
      std::string noise_path;
      if (spec.noise) {
        const auto k = rng.UniformInt(0, static_cast<int64_t>(noises.size()) - 1);
        noise = Tile(noises[k], clean.size());
        noise_path = noise_paths[k];
      }
      DegradeOptions opts;
      if (i == config.fault_index) opts.snr_error_db = config.fault_snr_error_db;
      Degraded deg = Degrade(clean, noise, spec, &rng, opts);

      // The target keeps the geometry, the direct-path delay and the level
      // of the degraded speech, without the reverberant tail.
      Waveform target = clean;
      if (spec.reverb) {
        Rir dry = GenerateFixedRir(deg.spec, config.dry_absorption);
        target = Waveform(Convolve(clean.samples, dry.taps), clean.id);
        for (double &v : target.samples) v *= deg.spec.rir_gain;
      }

      char buf[32];
      std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(i));
      CorpusEntry e;
      e.id = std::string(buf) + "_" + fs::path(src).stem().string();
      e.clean_path = "clean/" + e.id + ".wav";
      e.degraded_path = "degraded/" + e.id + ".wav";
      e.source_path = src;
      e.noise_path = noise_path;
      const std::string speaker = SpeakerOf(src);
      e.split = std::find(config.validation_speakers.begin(),
                          config.validation_speakers.end(),
                          speaker) != config.validation_speakers.end()
                    ? "valid"
                    : "train";
      e.spec = deg.spec;
      target.id = deg.degraded.id = e.id;
      QuantizeToFloat(&target);
      QuantizeToFloat(&deg.degraded);
      e.noisy_lsd_db = Lsd(target, deg.degraded);
      if (config.verify) {
        e.verified = true;
        e.verification = VerifyDegradation(deg.trace, deg.spec, config.tolerance);
        if (!e.verification.passed()) {
          result.failed_ids.push_back(e.id);
          LOG_ERROR << "verification failed for " << e.id << ": "
                    << e.verification.Failures();
        }
      }
      WriteWav((fs::path(out_dir) / e.clean_path).string(), target);
      WriteWav((fs::path(out_dir) / e.degraded_path).string(), deg.degraded);
      lines.push_back(json(e).dump());
      result.entries.push_back(std::move(e));
    }
    DMNET_CHECK(!result.entries.empty(), kData,
                "corpus is empty: every clean entry was unreadable");
  }

  const std::string tmp = result.manifest_path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    DMNET_CHECK(os.good(), kData, "cannot write " + tmp);
    for (const auto &l : lines) os << l << '\n';
  }
  fs::rename(tmp, result.manifest_path);
  return result;
}

std::vector<CorpusEntry> ReadManifest(const std::string &path) {
  std::ifstream is(path);
  DMNET_CHECK(is.good(), kData, "cannot open manifest " + path);
  std::vector<CorpusEntry> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<CorpusEntry>());
    } catch (const json::exception &e) {
      Throw(ErrorKind::kData, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string ManifestPath(const std::string &manifest, const std::string &rel) {
  fs::path p(rel);
  if (p.is_absolute()) return p.string();
  return (fs::path(manifest).parent_path() / p).string();
}

}  // namespace dmnet
