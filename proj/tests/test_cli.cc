// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "doctest_torch.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "dmnet/checkpoint.h"
#include "dmnet/wav.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dmnet;

namespace {

fs::path Root() {
  static const fs::path root = [] {
    auto d = fs::temp_directory_path() / "dmnet_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return root;
}

std::string ReadBytes(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

int Run(const std::string &args, std::string *output = nullptr) {
  const auto log = Root() / "last.log";
  const std::string cmd = std::string("\"") + DMNET_CLI_PATH + "\" --workdir \"" +
                          Root().string() + "\" " + args + " > \"" + log.string() +
                          "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) *output = ReadBytes(log);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void EnsureCorpus() {
  if (fs::exists(Root() / "corpus" / "manifest.jsonl")) return;
  REQUIRE(Run("synth --count 2 --seconds 0.5 --out src") == 0);
  REQUIRE(Run("simulate --clean src/clean --noise src/noise --count 2 --seed 4 --out corpus") == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("verify gate names the faulty utterance") {
  EnsureCorpus();
  std::ofstream(Root() / "fault.json") << R"({"fault_index": 1, "fault_snr_error_db": 5.0})";
  std::string out;
  const int rc = Run("simulate --config fault.json --clean src/clean --noise src/noise "
                     "--count 2 --seed 4 --verify --out corpus_fault", &out);
  CHECK(rc == 6);
  CHECK(out.find("FAIL 000001_") != std::string::npos);
  CHECK(out.find("FAIL 000000_") == std::string::npos);
  CHECK(Run("simulate --clean src/clean --noise src/noise --count 2 --seed 4 --verify "
            "--out corpus_ok") == 0);
  CHECK(fs::exists(Root() / "corpus_ok" / "resolved_config.json"));
}

TEST_CASE("config errors map to exit code 2") {
  std::ofstream(Root() / "bad.json") << R"({"cuont": 3})";
  CHECK(Run("simulate --config bad.json --out x") == 2);
  CHECK(Run("train --manifest corpus/manifest.jsonl --variant d3 --out x") == 2);
  CHECK(Run("nonsense") == 2);
}

TEST_CASE("zero-step training and restore") {
  EnsureCorpus();
  CHECK(Run("train --manifest corpus/manifest.jsonl --variant dm2 --steps 0 --out run0") == 0);
  auto ckpt = LoadCheckpoint((Root() / "run0" / "checkpoint_00000000.ckpt").string());
  CHECK(ckpt.has_alpha);
  CHECK(ckpt.alpha == 0.5);
  auto resolved = nlohmann::json::parse(ReadBytes(Root() / "run0" / "resolved_config.json"));
  CHECK(resolved["model"]["variant"] == "DM2");
  CHECK(resolved["train"]["steps"] == 0);

  CHECK(Run("restore --checkpoint run0 --in corpus/degraded --out r1") == 0);
  CHECK(Run("restore --checkpoint run0 --in corpus/degraded --out r2") == 0);
  int files = 0;
  for (const auto &e : fs::directory_iterator(Root() / "corpus" / "degraded")) {
    const auto name = e.path().filename();
    REQUIRE(fs::exists(Root() / "r1" / name));
    CHECK(ReadBytes(Root() / "r1" / name) == ReadBytes(Root() / "r2" / name));
    CHECK(ReadWav((Root() / "r1" / name).string()).size() == ReadWav(e.path().string()).size());
    ++files;
  }
  CHECK(files == 2);
  const auto one = fs::directory_iterator(Root() / "corpus" / "degraded")->path();
  CHECK(Run("restore --checkpoint run0/checkpoint_00000000.ckpt --in \"" + one.string() +
            "\" --out single/out.wav") == 0);
  CHECK(ReadBytes(Root() / "single" / "out.wav") == ReadBytes(Root() / "r1" / one.filename()));
  CHECK(Run("restore --checkpoint nowhere.ckpt --in corpus/degraded --out r3") == 5);
}

TEST_CASE("evaluate and plot") {
  EnsureCorpus();
  CHECK(Run("evaluate --manifest corpus/manifest.jsonl --restored corpus/degraded --out rep") == 0);
  CHECK(fs::exists(Root() / "rep" / "report.jsonl"));
  std::ofstream(Root() / "empty.jsonl").flush();
  CHECK(Run("evaluate --manifest empty.jsonl --restored corpus/degraded --out rep_empty") == 3);
  CHECK_FALSE(fs::exists(Root() / "rep_empty" / "report.jsonl"));
  const auto one = fs::directory_iterator(Root() / "corpus" / "degraded")->path();
  CHECK(Run("plot --in \"" + one.string() + "\" --in \"" + one.string() +
            "\" --out figs/pair.png") == 0);
  CHECK(fs::file_size(Root() / "figs" / "pair.png") > 100);
}

TEST_CASE("u1 is larger than dm1") {
  std::string u1, dm1;
  REQUIRE(Run("count-parameters --variant u1", &u1) == 0);
  REQUIRE(Run("count-parameters --variant dm1", &dm1) == 0);
  CHECK(std::stoll(u1) > std::stoll(dm1));
}

}  // TEST_SUITE
