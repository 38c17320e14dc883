// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_LOG_H_
#define DMNET_LOG_H_

#include <iostream>
#include <sstream>

namespace dmnet {

enum class LogLevel { kInfo = 0, kWarn = 1, kError = 2, kQuiet = 3 };

void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();

class LogMessage {
 public:
  LogMessage(LogLevel level, const char *file, int line);
  ~LogMessage();
  std::ostream &stream() { return buffer_; }

 private:
  LogLevel level_;
  std::ostringstream buffer_;
};

}  // namespace dmnet

#define LOG_INFO ::dmnet::LogMessage(::dmnet::LogLevel::kInfo, __FILE__, __LINE__).stream()
#define LOG_WARN ::dmnet::LogMessage(::dmnet::LogLevel::kWarn, __FILE__, __LINE__).stream()
#define LOG_ERROR ::dmnet::LogMessage(::dmnet::LogLevel::kError, __FILE__, __LINE__).stream()

#endif  // DMNET_LOG_H_
