#include "harmmtd/error.hpp"

namespace harmmtd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::MissingTarget: return "MissingTarget";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::PathExplosion: return "PathExplosion";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::UnknownVm: return "UnknownVm";
    case ErrorCode::UnknownHost: return "UnknownHost";
    case ErrorCode::NoOpMigration: return "NoOpMigration";
    case ErrorCode::UnknownVulnerability: return "UnknownVulnerability";
    case ErrorCode::NotPatchable: return "NotPatchable";
    case ErrorCode::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorCode::ThresholdUnreachable: return "ThresholdUnreachable";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::DecryptionFailure: return "DecryptionFailure";
    case ErrorCode::SignatureInvalid: return "SignatureInvalid";
    case ErrorCode::DigestMismatch: return "DigestMismatch";
    case ErrorCode::ReplayedNonce: return "ReplayedNonce";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::ExecutionFailed: return "ExecutionFailed";
    case ErrorCode::RegistrationDenied: return "RegistrationDenied";
    case ErrorCode::SessionExpired: return "SessionExpired";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace harmmtd
