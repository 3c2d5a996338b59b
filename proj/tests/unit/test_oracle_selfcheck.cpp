// Known-answer checks for the reference implementations themselves, so a
// disagreement in the other suites points at the library and not the oracle.

#define OPENSSL_SUPPRESS_DEPRECATED
#include <openssl/bn.h>
#include <openssl/srp.h>

#include <catch_amalgamated.hpp>

#include "oracle.hpp"

using namespace oracle;

namespace {

B32 b32(const std::string& hex) {
    B32 out{};
    auto b = from_hex(hex);
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

std::array<std::uint8_t, 16> b16(const std::string& hex) {
    std::array<std::uint8_t, 16> out{};
    auto b = from_hex(hex);
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

}  // namespace

TEST_CASE("ladder reproduces RFC 7748 vectors") {
    CHECK(to_hex(x25519(b32("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4"),
                        b32("e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c"))) ==
          "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552");
    CHECK(to_hex(x25519(b32("4b66e9d4d1b4673c5ad22691957d6af5c11b6421e0ea01d42ca4169e7918ba0d"),
                        b32("e5210f12786811d3f4b7959d0538ae2c31dbe7106fc03c3efc4cd549c715a493"))) ==
          "95cbde9476e8907d7aade45cb4b873f88b595a68799fa152e6f8f7647aac7957");
    CHECK(to_hex(x25519_base(b32("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a"))) ==
          "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a");
    CHECK(to_hex(x25519_base(b32("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb"))) ==
          "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f");
}

TEST_CASE("ladder agrees on the shared secret of the RFC 7748 key pair") {
    auto alice = b32("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a");
    auto bob = b32("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb");
    auto k1 = x25519(alice, x25519_base(bob));
    auto k2 = x25519(bob, x25519_base(alice));
    CHECK(k1 == k2);
    CHECK(to_hex(k1) == "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742");
}

TEST_CASE("libsodium hash answers FIPS 180 vectors") {
    CHECK(to_hex(sha256({})) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256({'a', 'b', 'c'})) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("textbook AES matches FIPS 197") {
    CHECK(to_hex(aes128_block(b16("000102030405060708090a0b0c0d0e0f"), b16("00112233445566778899aabbccddeeff"))) ==
          "69c4e0d86a7b0430d8cdb78070b4c55a");
    CHECK(to_hex(aes128_block(b16("2b7e151628aed2a6abf7158809cf4f3c"), b16("3243f6a8885a308d313198a2e0370734"))) ==
          "3925841d02dc09fbdc118597196a0b32");
}

TEST_CASE("textbook GCM matches the published test cases") {
    std::array<std::uint8_t, 16> zero{};
    auto empty = gcm_encrypt(zero, Buf(12, 0), {}, 16);
    CHECK(empty.ciphertext.empty());
    CHECK(to_hex(empty.tag) == "58e2fccefa7e3061367f1d57a4e7455a");

    auto one = gcm_encrypt(zero, Buf(12, 0), Buf(16, 0), 16);
    CHECK(to_hex(one.ciphertext) == "0388dace60b6a392f328c2b971b2fe78");
    CHECK(to_hex(one.tag) == "ab6e47d42cec13bdf53a67b21257bddf");

    auto key = b16("feffe9928665731c6d6a8f9467308308");
    auto pt = from_hex(
        "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a721c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de6"
        "57ba637b391aafd255");
    auto four = gcm_encrypt(key, from_hex("cafebabefacedbaddecaf888"), pt, 16);
    CHECK(to_hex(four.ciphertext) ==
          "42831ec2217774244b7221b784d0d49ce3aa212f2c02a4e035c17e2329aca12e21d514b25466931c7d8f6a5aac84aa051ba30b396a0a"
          "ac973d58e091473f5985");
    CHECK(to_hex(four.tag) == "4d5c2af327cd64a62cf35abd2ba6fab4");
}

TEST_CASE("textbook GCM handles a non-96-bit IV through GHASH") {
    // Test case 6 of the GCM submission: 60-byte IV; its AAD-free variant is
    // checked here only for the J0 path (ciphertext does not depend on AAD).
    auto key = b16("feffe9928665731c6d6a8f9467308308");
    auto iv = from_hex(
        "9313225df88406e555909c5aff5269aa6a7a9538534f7da1e4c303d2a318a728c3c0c95156809539fcf0e2429a6b525416aedbf5a0de6a"
        "57a637b39b");
    auto pt = from_hex(
        "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a721c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de6"
        "57ba637b39");
    auto out = gcm_encrypt(key, iv, pt, 16);
    CHECK(to_hex(out.ciphertext) ==
          "8ce24998625615b603a033aca13fb894be9112a5c3a211a8ba262a3cca7e2ca701e4a9a4fba43c90ccdcb281d48c7c6fd62875d2aca417"
          "034c34aee5");
}

TEST_CASE("oracle modulus is the RFC 5054 2048-bit prime") {
    auto* gn = SRP_get_default_gN("2048");
    REQUIRE(gn != nullptr);
    char* hex = BN_bn2hex(gn->N);
    std::string expected(hex);
    OPENSSL_free(hex);
    for (auto& c : expected) c = static_cast<char>(std::tolower(c));
    CHECK(to_hex(srp::modulus()) == expected);
    CHECK(BN_is_word(gn->g, 2));

    BIGNUM* n = BN_bin2bn(srp::modulus().data(), static_cast<int>(srp::modulus().size()), nullptr);
    CHECK(BN_check_prime(n, nullptr, nullptr) == 1);
    BN_free(n);
}

TEST_CASE("oracle SRP is self-consistent") {
    Buf salt = from_hex("beb25379d1a8581eb5a727673a2441ee");
    auto v = srp::verifier(salt, "alice", "password123");
    Buf a = from_hex("60975527035cf2ad1989806f0407210bc81edc04e2762a56afd529ddda2d4393");
    Buf b = from_hex("e487cb59d31ac550471e81f00f6928e01dda08e974a004f49e61f5d105284d20");
    auto s = srp::server_public(v, b);
    auto c = srp::client(a, salt, "alice", "password123", s);
    CHECK(c.k == srp::server_k(v, b, c.c, s));
    auto wrong = srp::client(a, salt, "alice", "password124", s);
    CHECK(wrong.k != srp::server_k(v, b, wrong.c, s));
}
