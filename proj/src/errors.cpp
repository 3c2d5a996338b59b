#include "tunnel/errors.hpp"

#include <array>

namespace tunnel {

namespace {

struct ErrorInfo {
    ErrorCode code;
    std::string_view name;
    int status;
    int exit;
};

constexpr std::array kErrors{
    ErrorInfo{ErrorCode::BadRequest, "BadRequest", 400, 10},
    ErrorInfo{ErrorCode::IllegalHeaderCharacter, "IllegalHeaderCharacter", 400, 11},
    ErrorInfo{ErrorCode::MalformedFraming, "MalformedFraming", 400, 12},
    ErrorInfo{ErrorCode::MalformedHeader, "MalformedHeader", 400, 13},
    ErrorInfo{ErrorCode::MalformedEnvelope, "MalformedEnvelope", 400, 14},
    ErrorInfo{ErrorCode::MissingBoundary, "MissingBoundary", 400, 15},
    ErrorInfo{ErrorCode::UnterminatedPart, "UnterminatedPart", 400, 16},
    ErrorInfo{ErrorCode::NotFound, "NotFound", 404, 17},
    ErrorInfo{ErrorCode::MethodNotAllowed, "MethodNotAllowed", 405, 18},
    ErrorInfo{ErrorCode::Internal, "Internal", 500, 19},

    ErrorInfo{ErrorCode::LowOrderPoint, "LowOrderPoint", 400, 20},
    ErrorInfo{ErrorCode::AuthenticationFailure, "AuthenticationFailure", 401, 21},
    ErrorInfo{ErrorCode::SignatureInvalid, "SignatureInvalid", 502, 22},
    ErrorInfo{ErrorCode::FingerprintMismatch, "FingerprintMismatch", 502, 23},
    ErrorInfo{ErrorCode::InvalidServerEphemeral, "InvalidServerEphemeral", 502, 24},
    ErrorInfo{ErrorCode::InvalidClientEphemeral, "InvalidClientEphemeral", 400, 25},
    ErrorInfo{ErrorCode::ProofMismatch, "ProofMismatch", 401, 26},
    ErrorInfo{ErrorCode::UntrustedGroup, "UntrustedGroup", 502, 27},

    ErrorInfo{ErrorCode::UnknownSession, "UnknownSession", 401, 30},
    ErrorInfo{ErrorCode::KeyExpired, "KeyExpired", 401, 31},
    ErrorInfo{ErrorCode::GraceExpired, "GraceExpired", 401, 32},
    ErrorInfo{ErrorCode::StalePacket, "StalePacket", 400, 33},
    ErrorInfo{ErrorCode::FutureTimestamp, "FutureTimestamp", 400, 34},
    ErrorInfo{ErrorCode::ReplayDetected, "ReplayDetected", 409, 35},
    ErrorInfo{ErrorCode::EncryptionRequired, "EncryptionRequired", 403, 36},
    ErrorInfo{ErrorCode::DowngradeRejected, "DowngradeRejected", 403, 37},
    ErrorInfo{ErrorCode::SessionNotEncrypted, "SessionNotEncrypted", 403, 38},
    ErrorInfo{ErrorCode::NoLoginInProgress, "NoLoginInProgress", 400, 39},

    ErrorInfo{ErrorCode::TransportError, "TransportError", 502, 40},
    ErrorInfo{ErrorCode::ServerProofInvalid, "ServerProofInvalid", 502, 41},
    ErrorInfo{ErrorCode::ProofRejected, "ProofRejected", 401, 42},
    ErrorInfo{ErrorCode::RefreshFailed, "RefreshFailed", 401, 43},
    ErrorInfo{ErrorCode::SessionClosed, "SessionClosed", 401, 44},
    ErrorInfo{ErrorCode::ClockSkewSuspected, "ClockSkewSuspected", 400, 45},
    ErrorInfo{ErrorCode::ServerError, "ServerError", 502, 46},

    ErrorInfo{ErrorCode::PasswordRequired, "PasswordRequired", 400, 50},
    ErrorInfo{ErrorCode::ClientProofInvalid, "ClientProofInvalid", 401, 51},
    ErrorInfo{ErrorCode::UpstreamProofInvalid, "UpstreamProofInvalid", 502, 52},
    ErrorInfo{ErrorCode::UpstreamHandshakeFailed, "UpstreamHandshakeFailed", 502, 53},

    ErrorInfo{ErrorCode::PathExists, "PathExists", 500, 60},
    ErrorInfo{ErrorCode::ConfigError, "ConfigError", 500, 61},
};

const ErrorInfo& info(ErrorCode code) {
    for (const auto& e : kErrors) {
        if (e.code == code) return e;
    }
    return kErrors[9];  // Internal
}

}  // namespace

std::string_view error_name(ErrorCode code) { return info(code).name; }
int http_status(ErrorCode code) { return info(code).status; }
int exit_code(ErrorCode code) { return info(code).exit; }

std::optional<ErrorCode> error_code_from_int(int value) {
    for (const auto& e : kErrors) {
        if (static_cast<int>(e.code) == value) return e.code;
    }
    return std::nullopt;
}

TunnelError::TunnelError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

TunnelError::TunnelError(ErrorCode code)
    : std::runtime_error(std::string(error_name(code))), code_(code) {}

}  // namespace tunnel
