#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gatekeeper {

enum class ErrorCode {
  kInvalidArgument,
  kIngestion,
  kConflict,
  kNotFound,
  kProviderUnavailable,
  kScriptedMiss,
  kEmptyCollection,
  kEmptyInput,
  kPrecondition,
  kBusy,
  kLockBusy,
  kDispatch,
  kProtocol,
  kDevice,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so
// callers (flows, the protocol layer) can map it onto a fail-closed outcome.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gatekeeper
