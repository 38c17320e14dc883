// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/checkpoint.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dmnet/error.h"

namespace dmnet {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'D', 'M', 'N', 'E', 'T', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

std::string DtypeName(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default: break;
  }
  Throw(ErrorKind::kCheckpoint, std::string("unsupported tensor dtype ") +
                                    c10::toString(t));
}

torch::ScalarType ParseDtype(const std::string &s) {
  if (s == "f32") return torch::kFloat32;
  if (s == "f64") return torch::kFloat64;
  if (s == "i64") return torch::kInt64;
  Throw(ErrorKind::kCheckpoint, "unknown tensor dtype " + s);
}

template <typename T>
void WritePod(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(v));
}

template <typename T>
T ReadPod(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(v));
  DMNET_CHECK(is.good(), kCheckpoint, "truncated checkpoint");
  return v;
}

}  // namespace

std::string Fnv1aHex(const std::string &bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ConfigHash(const json &config) { return Fnv1aHex(config.dump()); }

void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt) {
  json header;
  header["model_config"] = ckpt.model_config;
  header["config_hash"] = ConfigHash(ckpt.model_config);
  header["train_config"] = ckpt.train_config;
  header["variant"] = ckpt.variant;
  header["step"] = ckpt.step;
  header["alpha"] = ckpt.has_alpha ? json(ckpt.alpha) : json(nullptr);
  header["alpha_trajectory"] = ckpt.alpha_trajectory;
  header["manifest_hash"] = ckpt.manifest_hash;
  json index = json::array();
  std::vector<torch::Tensor> blobs;
  uint64_t offset = 0;
  auto add = [&](const std::string &group,
                 const std::map<std::string, torch::Tensor> &tensors) {
    for (const auto &[name, t] : tensors) {
      auto c = t.detach().contiguous().cpu();
      const uint64_t nbytes = c.numel() * c.element_size();
      index.push_back({{"group", group},
                       {"name", name},
                       {"dtype", DtypeName(c.scalar_type())},
                       {"shape", c.sizes().vec()},
                       {"offset", offset},
                       {"nbytes", nbytes}});
      offset += nbytes;
      blobs.push_back(c);
    }
  };
  add("model", ckpt.model);
  add("optimizer", ckpt.optimizer);
  header["tensors"] = index;
  const std::string text = header.dump();

  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    DMNET_CHECK(os.good(), kCheckpoint, "cannot write " + tmp);
    os.write(kMagic, sizeof(kMagic));
    WritePod<uint32_t>(os, kVersion);
    WritePod<uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto &b : blobs)
      os.write(static_cast<const char *>(b.data_ptr()),
               static_cast<std::streamsize>(b.numel() * b.element_size()));
    os.flush();
    DMNET_CHECK(os.good(), kCheckpoint, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  DMNET_CHECK(is.good(), kCheckpoint, "cannot open checkpoint " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  DMNET_CHECK(is.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
              kCheckpoint, path + " is not a dmnet checkpoint");
  const auto version = ReadPod<uint32_t>(is);
  DMNET_CHECK(version == kVersion, kCheckpoint,
              "unsupported checkpoint version " + std::to_string(version));
  const auto header_size = ReadPod<uint64_t>(is);
  std::string text(header_size, '\0');
  is.read(text.data(), static_cast<std::streamsize>(header_size));
  DMNET_CHECK(is.good(), kCheckpoint, "truncated checkpoint header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception &e) {
    Throw(ErrorKind::kCheckpoint, std::string("corrupt checkpoint header: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.model_config = header.at("model_config");
  DMNET_CHECK(header.at("config_hash").get<std::string>() == ConfigHash(ckpt.model_config),
              kCheckpoint, "checkpoint config hash does not match its config");
  ckpt.train_config = header.value("train_config", json());
  ckpt.variant = header.at("variant").get<std::string>();
  ckpt.step = header.at("step").get<int64_t>();
  if (!header.at("alpha").is_null()) {
    ckpt.has_alpha = true;
    ckpt.alpha = header.at("alpha").get<double>();
  }
  ckpt.alpha_trajectory =
      header.at("alpha_trajectory").get<std::vector<std::pair<int64_t, double>>>();
  ckpt.manifest_hash = header.value("manifest_hash", std::string());
  const auto base = is.tellg();
  for (const auto &entry : header.at("tensors")) {
    const auto dtype = ParseDtype(entry.at("dtype").get<std::string>());
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    const auto offset = entry.at("offset").get<uint64_t>();
    const auto nbytes = entry.at("nbytes").get<uint64_t>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    DMNET_CHECK(static_cast<uint64_t>(t.numel() * t.element_size()) == nbytes,
                kCheckpoint, "tensor size mismatch in checkpoint index");
    is.seekg(base + static_cast<std::streamoff>(offset));
    is.read(static_cast<char *>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    DMNET_CHECK(is.good(), kCheckpoint, "truncated checkpoint payload");
    const auto group = entry.at("group").get<std::string>();
    const auto name = entry.at("name").get<std::string>();
    (group == "model" ? ckpt.model : ckpt.optimizer)[name] = t;
  }
  return ckpt;
}

std::map<std::string, torch::Tensor> ModelState(torch::nn::Module &model) {
  std::map<std::string, torch::Tensor> out;
  for (const auto &item : model.named_parameters())
    out[item.key()] = item.value().detach().clone();
  for (const auto &item : model.named_buffers())
    out[item.key()] = item.value().detach().clone();
  return out;
}

void LoadModelState(torch::nn::Module &model,
                    const std::map<std::string, torch::Tensor> &state) {
  torch::NoGradGuard no_grad;
  size_t used = 0;
  auto load = [&](const std::string &name, torch::Tensor &dst) {
    auto it = state.find(name);
    DMNET_CHECK(it != state.end(), kCheckpoint, "checkpoint lacks tensor " + name);
    DMNET_CHECK(it->second.sizes() == dst.sizes(), kCheckpoint,
                "shape mismatch for tensor " + name);
    dst.copy_(it->second);
    ++used;
  };
  for (auto &item : model.named_parameters()) load(item.key(), item.value());
  for (auto &item : model.named_buffers()) load(item.key(), item.value());
  DMNET_CHECK(used == state.size(), kCheckpoint,
              "checkpoint holds tensors the model does not have");
}

DmNet LoadModel(const Checkpoint &ckpt, const ModelConfig *expected) {
  if (expected != nullptr) {
    DMNET_CHECK(ConfigHash(json(*expected)) == ConfigHash(ckpt.model_config), kCheckpoint,
                "model config hash mismatch: checkpoint was trained with a different "
                "configuration");
  }
  const auto cfg = ckpt.model_config.get<ModelConfig>();
  DmNet model(cfg);
  if (!ckpt.model.empty()) model->to(ckpt.model.begin()->second.scalar_type());
  LoadModelState(*model, ckpt.model);
  return model;
}

}  // namespace dmnet
