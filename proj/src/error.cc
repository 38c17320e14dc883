// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dmnet/error.h"

#include <atomic>
#include <cstring>

#include "dmnet/log.h"

namespace dmnet {

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kEnergy: return "energy error";
    case ErrorKind::kGeometry: return "geometry error";
    case ErrorKind::kDesign: return "design error";
    case ErrorKind::kCheckpoint: return "checkpoint error";
    case ErrorKind::kNumeric: return "numeric error";
  }
  return "error";
}

void Throw(ErrorKind kind, const std::string &what) {
  throw Error(kind, std::string(ErrorKindName(kind)) + ": " + what);
}

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::kInfo)};
}

void SetLogLevel(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel GetLogLevel() { return static_cast<LogLevel>(g_level.load()); }

LogMessage::LogMessage(LogLevel level, const char *file, int line)
    : level_(level) {
  static const char *kTags[] = {"INFO", "WARN", "ERROR"};
  const char *base = std::strrchr(file, '/');
  buffer_ << kTags[static_cast<int>(level)] << " (" << (base ? base + 1 : file)
          << ":" << line << ") ";
}

LogMessage::~LogMessage() {
  if (static_cast<int>(level_) >= g_level.load()) {
    buffer_ << '\n';
    std::cerr << buffer_.str();
  }
}

}  // namespace dmnet
