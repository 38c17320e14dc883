// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>

#include <png.h>

#include "dmnet/error.h"
#include "dmnet/metrics.h"
#include "dmnet/stft.h"

namespace dmnet {

namespace {

constexpr int kBins = kLsdFft / 2 + 1;

// Anchor points of viridis; luminance rises monotonically along the table.
constexpr double kAnchors[][3] = {
    {0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
    {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
    {0.135, 0.659, 0.518}, {0.267, 0.749, 0.441}, {0.478, 0.821, 0.318},
    {0.741, 0.873, 0.150}, {0.993, 0.906, 0.144}};
constexpr int kNumAnchors = sizeof(kAnchors) / sizeof(kAnchors[0]);

}  // namespace

std::array<uint8_t, 3> Image::At(int x, int y) const {
  DMNET_CHECK(x >= 0 && x < width && y >= 0 && y < height, kDimension,
              "pixel out of range");
  const auto *p = &rgb[3 * (static_cast<size_t>(y) * width + x)];
  return {p[0], p[1], p[2]};
}

std::array<uint8_t, 3> ColorMap(double t) {
  t = std::clamp(t, 0.0, 1.0) * (kNumAnchors - 1);
  const int i = std::min(static_cast<int>(t), kNumAnchors - 2);
  const double f = t - i;
  std::array<uint8_t, 3> c;
  for (int k = 0; k < 3; ++k) {
    const double v = kAnchors[i][k] * (1 - f) + kAnchors[i + 1][k] * f;
    c[k] = static_cast<uint8_t>(std::lround(255.0 * v));
  }
  return c;
}

std::vector<std::vector<double>> SpectrogramDb(const Waveform &wav) {
  DMNET_CHECK(!wav.samples.empty(), kData, "cannot plot an empty waveform");
  StftConfig cfg;
  cfg.n_fft = kLsdFft;
  cfg.hop = kLsdHop;
  cfg.win_length = kLsdFft;
  cfg.compress_exponent = 1.0;
  Stft stft(cfg);
  auto x = torch::tensor(wav.samples, torch::kFloat64);
  auto db = 10.0 * torch::log10(stft.Forward(x).abs().square() + kLsdFloor);
  db = db.contiguous();
  const int64_t t = db.size(0), f = db.size(1);
  const double *p = db.data_ptr<double>();
  std::vector<std::vector<double>> out(t, std::vector<double>(f));
  for (int64_t i = 0; i < t; ++i) std::copy(p + i * f, p + (i + 1) * f, out[i].begin());
  return out;
}

int BinRow(int bin) {
  DMNET_CHECK(bin >= 0 && bin < kBins, kDomain, "bin out of range");
  return kBins - 1 - bin;
}

int FrequencyBin(double hz) {
  DMNET_CHECK(hz >= 0.0 && hz <= kSampleRate / 2.0, kDomain,
              "frequency outside [0, fs/2]");
  return static_cast<int>(std::lround(hz * kLsdFft / kSampleRate));
}

Image RenderSpectrograms(const std::vector<Waveform> &panels,
                         const PlotOptions &options) {
  DMNET_CHECK(!panels.empty(), kConfig, "nothing to plot");
  DMNET_CHECK(options.range_db > 0.0 && options.gap >= 0, kConfig,
              "bad plot options");
  std::vector<std::vector<std::vector<double>>> specs;
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto &w : panels) {
    specs.push_back(SpectrogramDb(w));
    for (const auto &row : specs.back())
      peak = std::max(peak, *std::max_element(row.begin(), row.end()));
  }
  Image img;
  img.height = kBins;
  for (const auto &s : specs) img.width += static_cast<int>(s.size());
  img.width += options.gap * static_cast<int>(specs.size() - 1);
  img.rgb.assign(3 * static_cast<size_t>(img.width) * img.height, 255);
  int x0 = 0;
  for (const auto &s : specs) {
    for (size_t t = 0; t < s.size(); ++t) {
      for (int b = 0; b < kBins; ++b) {
        const double rel = s[t][b] - peak;  // <= 0
        const auto c = ColorMap(1.0 + rel / options.range_db);
        auto *p = &img.rgb[3 * (static_cast<size_t>(BinRow(b)) * img.width + x0 + t)];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
      }
    }
    x0 += static_cast<int>(s.size()) + options.gap;
  }
  return img;
}

void WritePng(const std::string &path, const Image &image) {
  DMNET_CHECK(image.width > 0 && image.height > 0 &&
                  image.rgb.size() == 3 * static_cast<size_t>(image.width) * image.height,
              kDimension, "malformed image");
  const std::string tmp = path + ".tmp";
  std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(tmp.c_str(), "wb"), &std::fclose);
  DMNET_CHECK(fp != nullptr, kData, "cannot open " + tmp);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  DMNET_CHECK(png != nullptr, kData, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    Throw(ErrorKind::kData, "libpng failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&image.rgb[3 * static_cast<size_t>(y) * image.width]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  fp.reset();
  std::filesystem::rename(tmp, path);
}

}  // namespace dmnet
