#pragma once

#include <memory>
#include <string_view>

#include "tunnel/bytes.hpp"

namespace tunnel::crypto {

inline constexpr std::size_t kPointSize = 32;
inline constexpr std::size_t kKeySize = 16;
inline constexpr std::size_t kIvSize = 16;
inline constexpr std::size_t kTagSize = 12;

using Digest = FixedBytes<32>;
using Fingerprint = FixedBytes<32>;
using Point = FixedBytes<kPointSize>;
using Iv = FixedBytes<kIvSize>;
using Tag = FixedBytes<kTagSize>;

/// SHA-256 over the concatenation of all parts.
Digest hash(std::initializer_list<ByteView> parts);
inline Digest hash(ByteView data) { return hash({data}); }

// --- X25519 --------------------------------------------------------------

struct EphemeralKeypair {
    Point private_scalar{};  // clamped
    Point public_point{};
};

struct SharedSecret {
    Point z{};
};

Point clamp_scalar(Point scalar);

EphemeralKeypair generate_ephemeral_keypair(const Point& entropy);
EphemeralKeypair generate_ephemeral_keypair(RandomSource& rng);

/// Throws LowOrderPoint when the result is the all-zero value.
SharedSecret ecdh_shared_secret(const EphemeralKeypair& own, const Point& peer_point);

// --- session keys ----------------------------------------------------------

class SessionKey {
public:
    SessionKey() = default;
    explicit SessionKey(const FixedBytes<kKeySize>& bytes) : bytes_(bytes) {}

    const FixedBytes<kKeySize>& bytes() const noexcept { return bytes_; }
    ByteView view() const noexcept { return bytes_; }

    friend bool operator==(const SessionKey& a, const SessionKey& b) {
        return constant_time_equal(a.bytes_, b.bytes_);
    }

private:
    FixedBytes<kKeySize> bytes_{};
};

inline constexpr std::string_view kSrpKeyContext = "apptunnel srp session key v1";

/// First 16 bytes of Hash(z || fingerprint).
SessionKey derive_tunnel_key(const SharedSecret& z, const Fingerprint& fingerprint);
/// First 16 bytes of Hash(k || kSrpKeyContext).
SessionKey derive_srp_session_key(const Digest& k);

// --- AES-128-GCM, 16-byte IV, 12-byte tag ----------------------------------

struct Sealed {
    Bytes ciphertext;
    Tag tag{};
};

Sealed seal(const SessionKey& key, const Iv& iv, ByteView plaintext);
/// Throws AuthenticationFailure without saying which input was wrong.
Bytes open(const SessionKey& key, const Iv& iv, ByteView ciphertext, const Tag& tag);

// --- detached signatures over the server ECDHE point -----------------------

struct SigningKeypair {
    Bytes private_key;
    Bytes public_key;
};

/// Pluggable detached-signature backend.
class SignatureScheme {
public:
    virtual ~SignatureScheme() = default;
    virtual std::string_view name() const = 0;
    virtual SigningKeypair generate(RandomSource& rng) const = 0;
    virtual Bytes sign(const SigningKeypair& keypair, ByteView message) const = 0;
    virtual bool verify(ByteView public_key, ByteView message, ByteView signature) const = 0;
};

/// Ed25519 via OpenSSL.
const SignatureScheme& default_signature_scheme();

struct SignedServerParam {
    Point q_point{};
    Bytes signature;
    Fingerprint signer_fingerprint{};
    Bytes signing_public_key;
};

Fingerprint fingerprint_of(ByteView signing_public_key);

SignedServerParam sign_server_param(const SigningKeypair& signing_key, const Point& q_point,
                                    const SignatureScheme& scheme = default_signature_scheme());

/// Returns the verified point. Throws FingerprintMismatch if the signing key
/// does not hash to the pinned fingerprint, SignatureInvalid otherwise.
Point verify_server_param(const SignedServerParam& param, const Fingerprint& pinned_fingerprint,
                          const SignatureScheme& scheme = default_signature_scheme());

}  // namespace tunnel::crypto
