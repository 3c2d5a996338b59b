#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "tunnel/crypto.hpp"

using namespace tunnel;
using namespace tunnel::crypto;
using fixtures::SeededRandom;

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> arr(const FixedBytes<N>& b) {
    std::array<std::uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

oracle::Buf buf(ByteView b) { return oracle::Buf(b.begin(), b.end()); }

}  // namespace

TEST_CASE("clamping zero entropy") {
    auto kp = generate_ephemeral_keypair(Point{});
    CHECK((kp.private_scalar[0] & 0x07) == 0);
    CHECK((kp.private_scalar[31] & 0xc0) == 0x40);
}

TEST_CASE("public points match the ladder oracle", "[oracle]") {
    SeededRandom rng(101);
    for (int i = 0; i < 24; ++i) {
        auto entropy = rng.draw<kPointSize>();
        auto kp = generate_ephemeral_keypair(entropy);
        CHECK(hex_encode(kp.public_point) == oracle::to_hex(oracle::x25519_base(arr(entropy))));
    }
}

TEST_CASE("distinct entropy gives distinct public points") {
    SeededRandom rng(102);
    std::set<Point> seen;
    for (int i = 0; i < 64; ++i) seen.insert(generate_ephemeral_keypair(rng).public_point);
    CHECK(seen.size() == 64);
}

TEST_CASE("shared secrets match the ladder oracle", "[oracle]") {
    SeededRandom rng(103);
    for (int i = 0; i < 24; ++i) {
        auto own = generate_ephemeral_keypair(rng);
        auto peer = generate_ephemeral_keypair(rng).public_point;
        auto z = ecdh_shared_secret(own, peer);
        CHECK(hex_encode(z.z) == oracle::to_hex(oracle::x25519(arr(own.private_scalar), arr(peer))));
    }
}

TEST_CASE("Diffie-Hellman is symmetric") {
    SeededRandom rng(104);
    for (int i = 0; i < 200; ++i) {
        auto a = generate_ephemeral_keypair(rng);
        auto b = generate_ephemeral_keypair(rng);
        CHECK(ecdh_shared_secret(a, b.public_point).z == ecdh_shared_secret(b, a.public_point).z);
    }
}

TEST_CASE("low-order peer points are rejected") {
    SeededRandom rng(105);
    auto own = generate_ephemeral_keypair(rng);
    auto expect_low = [&](const std::string& hex) {
        auto p = to_fixed<kPointSize>(hex_decode(hex));
        try {
            ecdh_shared_secret(own, p);
            FAIL("accepted " << hex);
        } catch (const TunnelError& e) {
            CHECK(e.code() == ErrorCode::LowOrderPoint);
        }
    };
    expect_low("0000000000000000000000000000000000000000000000000000000000000000");
    expect_low("0100000000000000000000000000000000000000000000000000000000000000");
    expect_low("e0eb7a7c3b41b8ae1656e3faf19fc46ada098deb9c32b1fd866205165f49b800");
    expect_low("5f9c95bca3508c24b1d0b1559c83ef5b04445cc4581c8e86d8224eddd09f1157");
    expect_low("ecffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff7f");
}

TEST_CASE("tunnel key derivation matches the hash oracle", "[oracle]") {
    SeededRandom rng(106);
    for (int i = 0; i < 24; ++i) {
        SharedSecret z{rng.draw<32>()};
        auto fp = rng.draw<32>();
        auto key = derive_tunnel_key(z, fp);
        oracle::Buf input = buf(z.z);
        input.insert(input.end(), fp.begin(), fp.end());
        auto expected = oracle::sha256(input);
        CHECK(hex_encode(key.bytes()) == oracle::to_hex(expected.data(), 16));
        CHECK(derive_tunnel_key(z, fp) == key);
    }
}

TEST_CASE("tunnel keys separate fingerprints") {
    SeededRandom rng(107);
    SharedSecret z{rng.draw<32>()};
    auto f1 = rng.draw<32>();
    auto f2 = f1;
    f2[0] ^= 1;
    CHECK_FALSE(derive_tunnel_key(z, f1) == derive_tunnel_key(z, f2));
}

TEST_CASE("SRP key derivation matches the hash oracle", "[oracle]") {
    SeededRandom rng(108);
    for (int i = 0; i < 24; ++i) {
        auto k = rng.draw<32>();
        oracle::Buf input = buf(k);
        input.insert(input.end(), kSrpKeyContext.begin(), kSrpKeyContext.end());
        CHECK(hex_encode(derive_srp_session_key(k).bytes()) == oracle::to_hex(oracle::sha256(input).data(), 16));
        auto flipped = k;
        flipped[i % 32] ^= static_cast<std::uint8_t>(1u << (i % 8));
        CHECK_FALSE(derive_srp_session_key(flipped) == derive_srp_session_key(k));
    }
}

TEST_CASE("hash matches libsodium on assorted inputs", "[oracle]") {
    SeededRandom rng(109);
    for (std::size_t len : {0, 1, 3, 55, 56, 63, 64, 65, 119, 128, 1000, 4096, 65537}) {
        auto data = rng.draw(len);
        CHECK(hex_encode(hash(data)) == oracle::to_hex(oracle::sha256(buf(data))));
    }
    auto a = rng.draw(40), b = rng.draw(9);
    CHECK(hash({a, b}) == hash(concat({a, b})));
}

TEST_CASE("AES-GCM with a 16-byte IV matches the textbook oracle", "[oracle]") {
    SeededRandom rng(110);
    for (std::size_t len : {0, 1, 15, 16, 17, 31, 32, 33, 48, 64, 100, 255, 256, 257, 511, 1000, 1024, 1500, 2048,
                            4095, 4096, 5000}) {
        SessionKey key(rng.draw<kKeySize>());
        auto iv = rng.draw<kIvSize>();
        auto pt = rng.draw(len);
        auto sealed = seal(key, iv, pt);
        auto expected = oracle::gcm_encrypt(arr(key.bytes()), buf(iv), buf(pt), kTagSize);
        CHECK(hex_encode(sealed.ciphertext) == oracle::to_hex(expected.ciphertext));
        CHECK(hex_encode(sealed.tag) == oracle::to_hex(expected.tag));
        CHECK(sealed.ciphertext.size() == pt.size());
    }
}

TEST_CASE("seal and open round trip, empty included") {
    SeededRandom rng(111);
    SessionKey key(rng.draw<kKeySize>());
    auto iv = rng.draw<kIvSize>();
    auto empty = seal(key, iv, {});
    CHECK(empty.ciphertext.empty());
    CHECK(open(key, iv, empty.ciphertext, empty.tag).empty());

    for (std::size_t len : {1, 16, 1000, 1 << 16, 1 << 20}) {
        auto pt = rng.draw(len);
        auto s = seal(key, iv, pt);
        CHECK(open(key, iv, s.ciphertext, s.tag) == pt);
    }
}

TEST_CASE("every single-bit flip fails authentication") {
    SeededRandom rng(112);
    SessionKey key(rng.draw<kKeySize>());
    auto iv = rng.draw<kIvSize>();
    auto pt = rng.draw(24);
    auto s = seal(key, iv, pt);
    auto expect_fail = [&](const Iv& i, const Bytes& ct, const Tag& t) {
        try {
            open(key, i, ct, t);
            return false;
        } catch (const TunnelError& e) {
            return e.code() == ErrorCode::AuthenticationFailure;
        }
    };
    for (std::size_t bit = 0; bit < kIvSize * 8; ++bit) {
        auto bad = iv;
        bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK(expect_fail(bad, s.ciphertext, s.tag));
    }
    for (std::size_t bit = 0; bit < s.ciphertext.size() * 8; ++bit) {
        auto bad = s.ciphertext;
        bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK(expect_fail(iv, bad, s.tag));
    }
    for (std::size_t bit = 0; bit < kTagSize * 8; ++bit) {
        auto bad = s.tag;
        bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK(expect_fail(iv, s.ciphertext, bad));
    }
    SessionKey other(rng.draw<kKeySize>());
    CHECK_THROWS_AS(open(other, iv, s.ciphertext, s.tag), TunnelError);
}

TEST_CASE("signatures bind key and message") {
    SeededRandom rng(113);
    const auto& scheme = default_signature_scheme();
    auto kp = scheme.generate(rng);
    auto other = scheme.generate(rng);
    auto q = rng.draw<kPointSize>();
    auto param = sign_server_param(kp, q);

    CHECK(scheme.verify(kp.public_key, q, param.signature));
    CHECK_FALSE(scheme.verify(other.public_key, q, param.signature));
    auto flipped = q;
    flipped[5] ^= 0x10;
    CHECK_FALSE(scheme.verify(kp.public_key, flipped, param.signature));
    CHECK(param.signer_fingerprint == hash(kp.public_key));
}

TEST_CASE("server parameter verification") {
    SeededRandom rng(114);
    auto kp = default_signature_scheme().generate(rng);
    auto q = generate_ephemeral_keypair(rng).public_point;
    auto param = sign_server_param(kp, q);
    auto pin = fingerprint_of(kp.public_key);

    CHECK(verify_server_param(param, pin) == q);

    auto wrong_pin = pin;
    wrong_pin[0] ^= 1;
    try {
        verify_server_param(param, wrong_pin);
        FAIL("wrong pin accepted");
    } catch (const TunnelError& e) {
        CHECK(e.code() == ErrorCode::FingerprintMismatch);
    }

    auto corrupt = param;
    corrupt.signature[10] ^= 0x01;
    try {
        verify_server_param(corrupt, pin);
        FAIL("corrupt signature accepted");
    } catch (const TunnelError& e) {
        CHECK(e.code() == ErrorCode::SignatureInvalid);
    }

    // A Q re-signed by an impostor key cannot match the pin.
    auto rogue = default_signature_scheme().generate(rng);
    auto resigned = sign_server_param(rogue, generate_ephemeral_keypair(rng).public_point);
    try {
        verify_server_param(resigned, pin);
        FAIL("re-signed Q accepted");
    } catch (const TunnelError& e) {
        CHECK(e.code() == ErrorCode::FingerprintMismatch);
    }
}
