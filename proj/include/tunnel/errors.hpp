#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tunnel {

// Numeric values are part of the wire format ({code, message} error bodies)
// and must never be renumbered.
enum class ErrorCode : int {
    // generic / framing
    BadRequest = 1000,
    IllegalHeaderCharacter = 1001,
    MalformedFraming = 1002,
    MalformedHeader = 1003,
    MalformedEnvelope = 1004,
    MissingBoundary = 1005,
    UnterminatedPart = 1006,
    NotFound = 1007,
    MethodNotAllowed = 1008,
    Internal = 1009,

    // crypto
    LowOrderPoint = 2000,
    AuthenticationFailure = 2001,
    SignatureInvalid = 2002,
    FingerprintMismatch = 2003,
    InvalidServerEphemeral = 2004,
    InvalidClientEphemeral = 2005,
    ProofMismatch = 2006,
    UntrustedGroup = 2007,

    // session / window
    UnknownSession = 3000,
    KeyExpired = 3001,
    GraceExpired = 3002,
    StalePacket = 3003,
    FutureTimestamp = 3004,
    ReplayDetected = 3005,
    EncryptionRequired = 3006,
    DowngradeRejected = 3007,
    SessionNotEncrypted = 3008,
    NoLoginInProgress = 3009,

    // client side
    TransportError = 4000,
    ServerProofInvalid = 4001,
    ProofRejected = 4002,
    RefreshFailed = 4003,
    SessionClosed = 4004,
    ClockSkewSuspected = 4005,
    ServerError = 4006,

    // proxy
    PasswordRequired = 5000,
    ClientProofInvalid = 5001,
    UpstreamProofInvalid = 5002,
    UpstreamHandshakeFailed = 5003,

    // cli
    PathExists = 6000,
    ConfigError = 6001,
};

std::string_view error_name(ErrorCode code);
/// HTTP status used when the error is reported to a peer.
int http_status(ErrorCode code);
/// Process exit code for the command line tool; distinct per ErrorCode.
int exit_code(ErrorCode code);
std::optional<ErrorCode> error_code_from_int(int value);

class TunnelError : public std::runtime_error {
public:
    TunnelError(ErrorCode code, const std::string& message);
    explicit TunnelError(ErrorCode code);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tunnel
