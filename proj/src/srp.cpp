#include "tunnel/srp.hpp"

namespace tunnel::srp {

namespace {

// RFC 5054, appendix A, 2048-bit group.
constexpr std::string_view kModulus2048Hex =
    "AC6BDB41324A9A9BF166DE5E1389582FAF72B6651987EE07FC3192943DB56050"
    "A37329CBB4A099ED8193E0757767A13DD52312AB4B03310DCD7F48A9DA04FD50"
    "E8083969EDB767B0CF6095179A163AB3661A05FBD5FAAAE82918A9962F0B93B8"
    "55F97993EC975EEAA80D740ADBF4FF747359D041D5C33EA71D281E446B14773B"
    "CA97B43A23FB801676BD207A436C6481F1D2B9078717461A5B9D32E688F87748"
    "544523B524B0D57D5EA77A2775D2ECFA032CFBDBF52FB3786160279004E57AE6"
    "AF874E7303CE53299CCC041C7BC308D82A5698F3A8D0C38271AE35F8E9DBFBB6"
    "94B5C803D89F7AE435DE236D525F54759B65E372FCD68EF20FA7111F9E4AFF73";

BigNum to_int(const Digest& d) { return BigNum::from_bytes(d); }

BigNum draw_ephemeral(RandomSource& rng) {
    BigNum out;
    do {
        out = BigNum::from_bytes(rng.draw(kEphemeralBytes));
    } while (out.is_zero());
    return out;
}

Digest scrambler(const SrpParams& params, const BigNum& c, const BigNum& s) {
    auto w = params.width();
    return crypto::hash({c.to_bytes_padded(w), s.to_bytes_padded(w)});
}

Digest session_secret(const SrpParams& params, const BigNum& premaster) {
    return crypto::hash(premaster.to_bytes_padded(params.width()));
}

Digest client_proof(const SrpParams& params, const BigNum& c, const BigNum& s, const Digest& k) {
    auto w = params.width();
    return crypto::hash({c.to_bytes_padded(w), s.to_bytes_padded(w), k});
}

Digest server_proof(const SrpParams& params, const BigNum& c, const Digest& pc, const Digest& k) {
    return crypto::hash({c.to_bytes_padded(params.width()), pc, k});
}

}  // namespace

const BigNum& standard_modulus() {
    static const BigNum n = BigNum::from_hex(kModulus2048Hex);
    return n;
}

const BigNum& standard_generator() {
    static const BigNum g(2);
    return g;
}

SrpParams SrpParams::standard(Bytes salt) {
    return SrpParams{standard_modulus(), standard_generator(), std::move(salt)};
}

BigNum multiplier(const SrpParams& params) {
    return to_int(crypto::hash({params.modulus.to_bytes(), params.generator.to_bytes_padded(params.width())}));
}

BigNum private_key(ByteView salt, std::string_view identity, std::string_view password) {
    auto inner = crypto::hash({to_bytes(identity), to_bytes(":"), to_bytes(password)});
    return to_int(crypto::hash({salt, inner}));
}

BigNum make_verifier(const SrpParams& params, std::string_view identity, std::string_view password) {
    auto x = private_key(params.salt, identity, password);
    return params.generator.mod_exp(x, params.modulus);
}

SrpState server_challenge(const SrpParams& params, const BigNum& verifier, RandomSource& rng) {
    const auto& n = params.modulus;
    auto kv = multiplier(params).mod_mul(verifier, n);
    SrpState state;
    state.role = SrpRole::Server;
    state.params = params;
    state.verifier = verifier;
    for (;;) {
        state.ephemeral_secret = draw_ephemeral(rng);
        state.own_public = kv.mod_add(params.generator.mod_exp(state.ephemeral_secret, n), n);
        if (!state.own_public.is_zero()) break;
    }
    return state;
}

ClientResponse client_respond(const SrpParams& params, std::string_view identity, std::string_view password,
                              const BigNum& server_s, RandomSource& rng) {
    const auto& n = params.modulus;
    if (server_s.mod(n).is_zero()) {
        throw TunnelError(ErrorCode::InvalidServerEphemeral, "S mod N == 0");
    }
    ClientResponse out;
    auto& st = out.state;
    st.role = SrpRole::Client;
    st.params = params;
    st.peer_public = server_s;
    do {
        st.ephemeral_secret = draw_ephemeral(rng);
        st.own_public = params.generator.mod_exp(st.ephemeral_secret, n);
    } while (st.own_public.is_zero());

    auto u = to_int(scrambler(params, st.own_public, server_s));
    if (u.is_zero()) throw TunnelError(ErrorCode::InvalidServerEphemeral, "scrambling parameter is zero");

    auto x = private_key(params.salt, identity, password);
    auto gx = params.generator.mod_exp(x, n);
    auto base = server_s.mod_sub(multiplier(params).mod_mul(gx, n), n);
    auto exponent = st.ephemeral_secret.add(u.mul(x));
    auto premaster = base.mod_exp(exponent, n);

    st.secret_k = session_secret(params, premaster);
    st.proof_pc = client_proof(params, st.own_public, server_s, st.secret_k);
    st.proof_ps = server_proof(params, st.own_public, st.proof_pc, st.secret_k);
    out.public_c = st.own_public;
    out.proof = st.proof_pc;
    return out;
}

ServerResult server_verify(SrpState& state, const BigNum& client_c, const Digest& client_proof_in) {
    const auto& params = state.params;
    const auto& n = params.modulus;
    if (client_c.mod(n).is_zero()) {
        throw TunnelError(ErrorCode::InvalidClientEphemeral, "C mod N == 0");
    }
    auto u = to_int(scrambler(params, client_c, state.own_public));
    auto base = client_c.mod_mul(state.verifier.mod_exp(u, n), n);
    auto premaster = base.mod_exp(state.ephemeral_secret, n);
    auto k = session_secret(params, premaster);
    auto expected = client_proof(params, client_c, state.own_public, k);
    if (!constant_time_equal(expected, client_proof_in)) {
        throw TunnelError(ErrorCode::ProofMismatch, "client proof does not verify");
    }
    state.peer_public = client_c;
    state.secret_k = k;
    state.proof_pc = expected;
    state.proof_ps = server_proof(params, client_c, expected, k);
    return ServerResult{state.secret_k, state.proof_ps};
}

void client_verify_server(const SrpState& state, const Digest& proof) {
    if (!constant_time_equal(state.proof_ps, proof)) {
        throw TunnelError(ErrorCode::ServerProofInvalid, "server proof does not verify");
    }
}

}  // namespace tunnel::srp
