// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/wav.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dmnet/error.h"

namespace dmnet {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T ReadLe(const char *p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void PutLe(std::string *out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out->append(buf, sizeof(T));
}

}  // namespace

Waveform ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Throw(ErrorKind::kData, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0)
    Throw(ErrorKind::kData, path + " is not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const char *data = nullptr;
  size_t data_size = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string tag = bytes.substr(pos, 4);
    size_t size = ReadLe<uint32_t>(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) size = bytes.size() - body;
    if (tag == "fmt ") {
      if (size < 16) Throw(ErrorKind::kData, path + ": truncated fmt chunk");
      format = ReadLe<uint16_t>(bytes.data() + body);
      channels = ReadLe<uint16_t>(bytes.data() + body + 2);
      rate = ReadLe<uint32_t>(bytes.data() + body + 4);
      bits = ReadLe<uint16_t>(bytes.data() + body + 14);
      if (format == kFormatExtensible && size >= 26)
        format = ReadLe<uint16_t>(bytes.data() + body + 24);
      have_fmt = true;
    } else if (tag == "data") {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || data == nullptr)
    Throw(ErrorKind::kData, path + ": missing fmt or data chunk");
  if (channels != 1)
    Throw(ErrorKind::kData, path + ": expected mono audio, found " +
                                std::to_string(channels) + " channels");
  if (rate != static_cast<uint32_t>(kSampleRate))
    Throw(ErrorKind::kData, path + ": expected 16000 Hz, found " +
                                std::to_string(rate) +
                                " Hz (resampling is not supported)");

  Waveform wav;
  wav.id = std::filesystem::path(path).stem().string();
  if (format == kFormatPcm && bits == 16) {
    const size_t n = data_size / 2;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
      wav.samples[i] = ReadLe<int16_t>(data + 2 * i) / 32768.0;
  } else if (format == kFormatFloat && bits == 32) {
    const size_t n = data_size / 4;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) wav.samples[i] = ReadLe<float>(data + 4 * i);
  } else {
    Throw(ErrorKind::kData, path + ": unsupported encoding (format " +
                                std::to_string(format) + ", " +
                                std::to_string(bits) + " bits)");
  }
  return wav;
}

void WriteWav(const std::string &path, const Waveform &wav) {
  DMNET_CHECK(wav.sample_rate == kSampleRate, kData,
              "refusing to write non-16 kHz audio to " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(wav.samples.size() * 4);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutLe<uint32_t>(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutLe<uint32_t>(&out, 16);
  PutLe<uint16_t>(&out, kFormatFloat);
  PutLe<uint16_t>(&out, 1);
  PutLe<uint32_t>(&out, kSampleRate);
  PutLe<uint32_t>(&out, kSampleRate * 4);
  PutLe<uint16_t>(&out, 4);
  PutLe<uint16_t>(&out, 32);
  out += "data";
  PutLe<uint32_t>(&out, data_bytes);
  for (double s : wav.samples) PutLe<float>(&out, static_cast<float>(s));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Throw(ErrorKind::kData, "cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) Throw(ErrorKind::kData, "short write to " + path);
}

void QuantizeToFloat(Waveform *wav) {
  for (double &s : wav->samples) s = static_cast<float>(s);
}

}  // namespace dmnet
