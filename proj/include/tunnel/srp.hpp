#pragma once

#include <string_view>

#include "tunnel/bignum.hpp"
#include "tunnel/crypto.hpp"

namespace tunnel::srp {

using crypto::Digest;

/// Group and salt announced to the client for one user.
struct SrpParams {
    BigNum modulus;
    BigNum generator;
    Bytes salt;

    /// The 2048-bit group from RFC 5054 (g = 2) with the given salt.
    static SrpParams standard(Bytes salt);
    /// Length of the modulus in bytes; the width every value is padded to.
    std::size_t width() const { return modulus.num_bytes(); }
};

const BigNum& standard_modulus();
const BigNum& standard_generator();

enum class SrpRole { Client, Server };

/// Per-login protocol state. The password is never stored here.
struct SrpState {
    SrpRole role = SrpRole::Client;
    SrpParams params;
    BigNum ephemeral_secret;  // a or b
    BigNum own_public;        // C (client) or S (server)
    BigNum peer_public;
    BigNum verifier;  // server only
    Digest secret_k{};
    Digest proof_pc{};
    Digest proof_ps{};
};

inline constexpr std::size_t kEphemeralBytes = 32;
inline constexpr std::size_t kSaltBytes = 16;

/// k = H(N || pad(g)).
BigNum multiplier(const SrpParams& params);
/// x = H(salt || H(identity ":" password)).
BigNum private_key(ByteView salt, std::string_view identity, std::string_view password);
/// v = g^x mod N, computed at registration.
BigNum make_verifier(const SrpParams& params, std::string_view identity, std::string_view password);

/// S = k*v + g^b mod N; redraws b while S mod N == 0.
SrpState server_challenge(const SrpParams& params, const BigNum& verifier, RandomSource& rng);

struct ClientResponse {
    SrpState state;
    BigNum public_c;
    Digest proof;
};

/// Computes C = g^a, K = H(pad(premaster)) and P_C = H(pad(C) || pad(S) || K).
/// Throws InvalidServerEphemeral if server_s mod N == 0 (or the scrambler is 0).
ClientResponse client_respond(const SrpParams& params, std::string_view identity,
                              std::string_view password, const BigNum& server_s, RandomSource& rng);

struct ServerResult {
    Digest secret_k{};
    Digest server_proof{};
};

/// Verifies P_C in constant time and returns K and P_S = H(pad(C) || P_C || K).
/// Throws InvalidClientEphemeral or ProofMismatch; no proof is produced on failure.
ServerResult server_verify(SrpState& state, const BigNum& client_c, const Digest& client_proof);

/// Client-side check of P_S. Throws ServerProofInvalid.
void client_verify_server(const SrpState& state, const Digest& server_proof);

}  // namespace tunnel::srp
