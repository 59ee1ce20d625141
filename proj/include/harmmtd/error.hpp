#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace harmmtd {

enum class ErrorCode {
  // scenario / model construction
  InvalidScenario,
  DanglingReference,
  MissingTarget,
  DuplicateId,
  PathExplosion,
  // cloud actions
  CapacityExceeded,
  UnknownVm,
  UnknownHost,
  NoOpMigration,
  UnknownVulnerability,
  NotPatchable,
  // strategy selection
  EmptyEvaluationSet,
  ThresholdUnreachable,
  // protocol
  ProtocolError,
  DecryptionFailure,
  SignatureInvalid,
  DigestMismatch,
  ReplayedNonce,
  Unauthorized,
  ExecutionFailed,
  RegistrationDenied,
  SessionExpired,
  NetworkError,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace harmmtd
