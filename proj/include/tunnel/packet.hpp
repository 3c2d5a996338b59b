#pragma once

#include <cstdint>
#include <functional>

#include "tunnel/crypto.hpp"
#include "tunnel/message.hpp"

namespace tunnel {

inline constexpr std::size_t kUidSize = 16;
inline constexpr std::size_t kNonceSize = 16;

using Uid = FixedBytes<kUidSize>;
using Nonce = FixedBytes<kNonceSize>;

inline constexpr std::string_view kUidHeader = "X-Tunnel-UID";
inline constexpr std::string_view kTimestampHeader = "X-Tunnel-Timestamp";
inline constexpr std::string_view kNonceHeader = "X-Tunnel-Nonce";
inline constexpr std::string_view kTunnelErrorHeader = "X-Tunnel-Error";
inline constexpr std::string_view kPacketContentType = "application/octet-stream";

std::string uid_to_hex(const Uid& uid);
/// Throws UnknownSession for anything other than 32 hex characters.
Uid uid_from_hex(std::string_view hex);

/// Wire unit: the uid travels in a cleartext header, the body is iv || ciphertext || tag.
struct TunnelPacket {
    Uid uid{};
    crypto::Iv iv{};
    Bytes ciphertext;
    crypto::Tag tag{};

    Bytes body() const;
    /// Throws AuthenticationFailure if the body is shorter than iv + tag.
    static TunnelPacket from_body(const Uid& uid, ByteView body);
};

struct SealedEnvelope {
    std::int64_t timestamp = 0;
    Nonce nonce{};
    InnerMessage inner;
    HeaderList cookies;  // (name, value); carried in the sealed Cookie header

    friend bool operator==(const SealedEnvelope&, const SealedEnvelope&) = default;
};

struct ReplayWindow {
    std::int64_t max_age = 120;
    std::int64_t future_skew = 5;
    /// Packets stamped before this instant are stale regardless of age.
    std::int64_t not_before = 0;
};

/// Plaintext layout before sealing: timestamp, nonce and cookie header lines
/// followed by the inner message's own headers.
Bytes encode_envelope(const SealedEnvelope& env);
SealedEnvelope decode_envelope(ByteView plaintext);

TunnelPacket seal_envelope(const crypto::SessionKey& key, const Uid& uid, const SealedEnvelope& env,
                           RandomSource& rng);

/// Returns true when the nonce has already been used. The server passes its
/// atomic check-and-record here; it is only invoked after every other check passed.
using NonceSeen = std::function<bool(const Nonce&)>;

/// Throws AuthenticationFailure, StalePacket, FutureTimestamp or ReplayDetected.
SealedEnvelope open_envelope(const crypto::SessionKey& key, const TunnelPacket& pkt, std::int64_t now,
                             const NonceSeen& nonce_seen, const ReplayWindow& window = {});

}  // namespace tunnel
