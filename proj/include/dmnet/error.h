// Copyright 2026 The dmnet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DMNET_ERROR_H_
#define DMNET_ERROR_H_

#include <stdexcept>
#include <string>

namespace dmnet {

// Failure classes. The CLI maps them onto distinct exit codes.
enum class ErrorKind {
  kConfig,      // invalid configuration or arguments
  kData,        // unreadable / malformed / missing input data
  kDimension,   // tensor or buffer shape mismatch
  kDomain,      // value outside the mathematical domain of an op
  kEnergy,      // silent signal where energy is required
  kGeometry,    // room geometry violates constraints
  kDesign,      // filter design produced an unstable system
  kCheckpoint,  // checkpoint cannot be loaded into this model
  kNumeric,     // NaN / Inf during training or evaluation
};

const char *ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void Throw(ErrorKind kind, const std::string &what);

#define DMNET_CHECK(cond, kind, msg)                      \
  do {                                                    \
    if (!(cond)) ::dmnet::Throw(::dmnet::ErrorKind::kind, \
                                std::string(msg));        \
  } while (0)

}  // namespace dmnet

#endif  // DMNET_ERROR_H_
