#include <catch_amalgamated.hpp>

#include <gmpxx.h>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "tunnel/srp.hpp"

using namespace tunnel;
using namespace tunnel::srp;
using fixtures::ScriptedRandom;
using fixtures::SeededRandom;

namespace {

oracle::Buf buf(ByteView b) { return oracle::Buf(b.begin(), b.end()); }

std::string password_for(int i) { return "pw-" + std::to_string(i * 7919); }

mpz_class mpz(const BigNum& v) { return mpz_class(v.to_hex(), 16); }

BigNum big(const mpz_class& v) { return BigNum::from_hex(v.get_str(16)); }

}  // namespace

TEST_CASE("group parameters") {
    auto p = SrpParams::standard(Bytes(16, 1));
    CHECK(p.width() == 256);
    CHECK(hex_encode(p.modulus.to_bytes()) == oracle::to_hex(oracle::srp::modulus()));
    CHECK(p.generator == BigNum(2));
}

TEST_CASE("verifiers match the oracle", "[oracle]") {
    SeededRandom rng(201);
    for (int i = 0; i < 20; ++i) {
        auto salt = rng.draw(kSaltBytes);
        auto params = SrpParams::standard(salt);
        auto id = "user" + std::to_string(i);
        CHECK(hex_encode(make_verifier(params, id, password_for(i)).to_bytes()) ==
              oracle::to_hex(oracle::srp::verifier(buf(salt), id, password_for(i))));
    }
}

TEST_CASE("server challenge matches the oracle", "[oracle]") {
    SeededRandom rng(202);
    for (int i = 0; i < 20; ++i) {
        auto params = SrpParams::standard(rng.draw(kSaltBytes));
        auto v = make_verifier(params, "alice", password_for(i));
        auto b = rng.draw(kEphemeralBytes);
        b[0] |= 1;  // never zero
        ScriptedRandom scripted(rng);
        scripted.push(b);
        auto state = server_challenge(params, v, scripted);
        CHECK(hex_encode(state.own_public.to_bytes()) ==
              oracle::to_hex(oracle::srp::server_public(buf(v.to_bytes()), buf(b))));
        CHECK_FALSE(state.own_public.mod(params.modulus).is_zero());
    }
}

TEST_CASE("client response matches the oracle", "[oracle]") {
    SeededRandom rng(203);
    for (int i = 0; i < 20; ++i) {
        auto salt = rng.draw(kSaltBytes);
        auto params = SrpParams::standard(salt);
        auto id = "id" + std::to_string(i);
        auto v = make_verifier(params, id, password_for(i));
        auto server = server_challenge(params, v, rng);

        auto a = rng.draw(kEphemeralBytes);
        a[0] |= 1;
        ScriptedRandom scripted(rng);
        scripted.push(a);
        auto response = client_respond(params, id, password_for(i), server.own_public, scripted);
        auto expected = oracle::srp::client(buf(a), buf(salt), id, password_for(i), buf(server.own_public.to_bytes()));

        CHECK(hex_encode(response.public_c.to_bytes()) == oracle::to_hex(expected.c));
        CHECK(hex_encode(response.state.secret_k) == oracle::to_hex(expected.k));
        CHECK(hex_encode(response.proof) == oracle::to_hex(expected.pc));
        CHECK(hex_encode(response.state.proof_ps) == oracle::to_hex(expected.ps));

        auto result = server_verify(server, response.public_c, response.proof);
        CHECK(hex_encode(result.secret_k) ==
              oracle::to_hex(oracle::srp::server_k(buf(v.to_bytes()), buf(server.ephemeral_secret.to_bytes()),
                                                   expected.c, buf(server.own_public.to_bytes()))));
    }
}

TEST_CASE("correct password gives mutual authentication") {
    SeededRandom rng(204);
    for (int i = 0; i < 50; ++i) {
        auto params = SrpParams::standard(rng.draw(kSaltBytes));
        auto v = make_verifier(params, "bob", password_for(i));
        auto server = server_challenge(params, v, rng);
        auto client = client_respond(params, "bob", password_for(i), server.own_public, rng);
        auto result = server_verify(server, client.public_c, client.proof);
        CHECK(result.secret_k == client.state.secret_k);
        CHECK_NOTHROW(client_verify_server(client.state, result.server_proof));
    }
}

TEST_CASE("wrong password is rejected and no server proof is produced") {
    SeededRandom rng(205);
    for (int i = 0; i < 50; ++i) {
        auto params = SrpParams::standard(rng.draw(kSaltBytes));
        auto v = make_verifier(params, "bob", "right");
        auto server = server_challenge(params, v, rng);
        auto client = client_respond(params, "bob", password_for(i), server.own_public, rng);
        try {
            server_verify(server, client.public_c, client.proof);
            FAIL("wrong password accepted");
        } catch (const TunnelError& e) {
            CHECK(e.code() == ErrorCode::ProofMismatch);
        }
        CHECK(server.proof_ps == Digest{});
    }
}

TEST_CASE("same user twice gets a fresh challenge") {
    SeededRandom rng(206);
    auto params = SrpParams::standard(rng.draw(kSaltBytes));
    auto v = make_verifier(params, "carol", "pw");
    CHECK(server_challenge(params, v, rng).own_public != server_challenge(params, v, rng).own_public);
}

TEST_CASE("server redraws b when S would be zero") {
    SeededRandom rng(207);
    auto params = SrpParams::standard(rng.draw(kSaltBytes));
    auto n = mpz(params.modulus);

    // Choose v so that k*v == -g^b0 (mod N); b0 then yields S == 0.
    auto b0 = rng.draw(kEphemeralBytes);
    b0[0] |= 1;
    mpz_class gb0;
    mpz_class b0_int = mpz(BigNum::from_bytes(b0));
    mpz_powm(gb0.get_mpz_t(), mpz_class(2).get_mpz_t(), b0_int.get_mpz_t(), n.get_mpz_t());
    mpz_class k_inv;
    REQUIRE(mpz_invert(k_inv.get_mpz_t(), mpz(multiplier(params)).get_mpz_t(), n.get_mpz_t()) != 0);
    mpz_class v = ((n - gb0) * k_inv) % n;

    auto b1 = rng.draw(kEphemeralBytes);
    b1[0] |= 1;
    ScriptedRandom scripted(rng);
    scripted.push(b0);
    scripted.push(b1);
    auto state = server_challenge(params, big(v), scripted);
    CHECK(state.ephemeral_secret == BigNum::from_bytes(b1));
    CHECK_FALSE(state.own_public.is_zero());
    CHECK(hex_encode(state.own_public.to_bytes()) ==
          oracle::to_hex(oracle::srp::server_public(buf(big(v).to_bytes()), buf(b1))));
}

TEST_CASE("zero ephemerals are refused") {
    SeededRandom rng(208);
    auto params = SrpParams::standard(rng.draw(kSaltBytes));
    for (const auto& bad : {BigNum(0), params.modulus, params.modulus.mul(BigNum(3))}) {
        try {
            client_respond(params, "dave", "pw", bad, rng);
            FAIL("zero S accepted");
        } catch (const TunnelError& e) {
            CHECK(e.code() == ErrorCode::InvalidServerEphemeral);
        }
        auto server = server_challenge(params, make_verifier(params, "dave", "pw"), rng);
        try {
            server_verify(server, bad, Digest{});
            FAIL("zero C accepted");
        } catch (const TunnelError& e) {
            CHECK(e.code() == ErrorCode::InvalidClientEphemeral);
        }
    }
}

TEST_CASE("tampered client proof or server proof") {
    SeededRandom rng(209);
    auto params = SrpParams::standard(rng.draw(kSaltBytes));
    auto v = make_verifier(params, "erin", "pw");
    auto server = server_challenge(params, v, rng);
    auto client = client_respond(params, "erin", "pw", server.own_public, rng);

    auto bad = client.proof;
    bad[31] ^= 0x80;
    CHECK_THROWS_AS(server_verify(server, client.public_c, bad), TunnelError);

    auto result = server_verify(server, client.public_c, client.proof);
    auto forged = result.server_proof;
    forged[0] ^= 1;
    try {
        client_verify_server(client.state, forged);
        FAIL("forged P_S accepted");
    } catch (const TunnelError& e) {
        CHECK(e.code() == ErrorCode::ServerProofInvalid);
    }
}
