#include "tunnel/crypto.hpp"

#include <algorithm>

#include "openssl_util.hpp"

namespace tunnel::crypto {

using detail::CipherCtxPtr;
using detail::MdCtxPtr;
using detail::PkeyCtxPtr;
using detail::PkeyPtr;

namespace {

[[noreturn]] void openssl_failure(const char* what) {
    throw TunnelError(ErrorCode::Internal, std::string("OpenSSL: ") + what);
}

PkeyPtr x25519_private(const Point& scalar) {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, scalar.data(), scalar.size()));
    if (!key) openssl_failure("X25519 private key");
    return key;
}

}  // namespace

Digest hash(std::initializer_list<ByteView> parts) {
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) openssl_failure("sha256 init");
    for (auto part : parts) {
        if (!part.empty() && EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1) {
            openssl_failure("sha256 update");
        }
    }
    Digest out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
        openssl_failure("sha256 final");
    }
    return out;
}

Point clamp_scalar(Point scalar) {
    scalar[0] &= 0xf8;
    scalar[31] &= 0x7f;
    scalar[31] |= 0x40;
    return scalar;
}

EphemeralKeypair generate_ephemeral_keypair(const Point& entropy) {
    EphemeralKeypair kp;
    kp.private_scalar = clamp_scalar(entropy);
    auto key = x25519_private(kp.private_scalar);
    std::size_t len = kp.public_point.size();
    if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_point.data(), &len) != 1 || len != kPointSize) {
        openssl_failure("X25519 public key");
    }
    return kp;
}

EphemeralKeypair generate_ephemeral_keypair(RandomSource& rng) {
    return generate_ephemeral_keypair(rng.draw<kPointSize>());
}

SharedSecret ecdh_shared_secret(const EphemeralKeypair& own, const Point& peer_point) {
    auto key = x25519_private(own.private_scalar);
    PkeyPtr peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_point.data(), peer_point.size()));
    if (!peer) throw TunnelError(ErrorCode::LowOrderPoint, "unusable peer point");
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1) openssl_failure("derive init");
    SharedSecret out;
    std::size_t len = out.z.size();
    // OpenSSL refuses to derive an all-zero secret; both paths mean a low-order peer point.
    if (EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
        EVP_PKEY_derive(ctx.get(), out.z.data(), &len) != 1 || len != kPointSize) {
        throw TunnelError(ErrorCode::LowOrderPoint, "peer point yields no shared secret");
    }
    if (std::all_of(out.z.begin(), out.z.end(), [](auto b) { return b == 0; })) {
        throw TunnelError(ErrorCode::LowOrderPoint, "all-zero shared secret");
    }
    return out;
}

namespace {

SessionKey truncate_key(const Digest& d) {
    FixedBytes<kKeySize> k{};
    std::copy_n(d.begin(), kKeySize, k.begin());
    return SessionKey(k);
}

}  // namespace

SessionKey derive_tunnel_key(const SharedSecret& z, const Fingerprint& fingerprint) {
    return truncate_key(hash({z.z, fingerprint}));
}

SessionKey derive_srp_session_key(const Digest& k) {
    auto context = to_bytes(kSrpKeyContext);
    return truncate_key(hash({k, context}));
}

namespace {

CipherCtxPtr gcm_context(bool encrypt, const SessionKey& key, const Iv& iv) {
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx) openssl_failure("cipher ctx");
    if (EVP_CipherInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr, encrypt ? 1 : 0) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr) != 1 ||
        EVP_CipherInit_ex(ctx.get(), nullptr, nullptr, key.bytes().data(), iv.data(), encrypt ? 1 : 0) != 1) {
        openssl_failure("gcm init");
    }
    return ctx;
}

}  // namespace

Sealed seal(const SessionKey& key, const Iv& iv, ByteView plaintext) {
    auto ctx = gcm_context(true, key, iv);
    Sealed out;
    out.ciphertext.resize(plaintext.size());
    int len = 0;
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.ciphertext.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1) {
        openssl_failure("gcm encrypt");
    }
    int tail = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.ciphertext.data() + len, &tail) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(out.tag.size()),
                            out.tag.data()) != 1) {
        openssl_failure("gcm final");
    }
    return out;
}

Bytes open(const SessionKey& key, const Iv& iv, ByteView ciphertext, const Tag& tag) {
    auto ctx = gcm_context(false, key, iv);
    Bytes plaintext(ciphertext.size());
    int len = 0;
    if (!ciphertext.empty() &&
        EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, ciphertext.data(),
                          static_cast<int>(ciphertext.size())) != 1) {
        throw TunnelError(ErrorCode::AuthenticationFailure);
    }
    Tag expected = tag;
    int tail = 0;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(expected.size()),
                            expected.data()) != 1 ||
        EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + len, &tail) != 1) {
        throw TunnelError(ErrorCode::AuthenticationFailure);
    }
    return plaintext;
}

namespace {

class Ed25519Scheme final : public SignatureScheme {
public:
    std::string_view name() const override { return "ed25519"; }

    SigningKeypair generate(RandomSource& rng) const override {
        auto seed = rng.draw(32);
        PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
        if (!key) openssl_failure("ed25519 keygen");
        SigningKeypair kp;
        kp.private_key = seed;
        kp.public_key.resize(32);
        std::size_t len = kp.public_key.size();
        if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_key.data(), &len) != 1) {
            openssl_failure("ed25519 public key");
        }
        return kp;
    }

    Bytes sign(const SigningKeypair& keypair, ByteView message) const override {
        PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, keypair.private_key.data(),
                                                 keypair.private_key.size()));
        if (!key) throw TunnelError(ErrorCode::BadRequest, "invalid ed25519 private key");
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
            openssl_failure("ed25519 sign init");
        }
        Bytes sig(64);
        std::size_t len = sig.size();
        if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1) {
            openssl_failure("ed25519 sign");
        }
        sig.resize(len);
        return sig;
    }

    bool verify(ByteView public_key, ByteView message, ByteView signature) const override {
        PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size()));
        if (!key) return false;
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
        return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(), message.size()) == 1;
    }
};

}  // namespace

const SignatureScheme& default_signature_scheme() {
    static const Ed25519Scheme scheme;
    return scheme;
}

Fingerprint fingerprint_of(ByteView signing_public_key) { return hash(signing_public_key); }

SignedServerParam sign_server_param(const SigningKeypair& signing_key, const Point& q_point,
                                    const SignatureScheme& scheme) {
    SignedServerParam out;
    out.q_point = q_point;
    out.signature = scheme.sign(signing_key, q_point);
    out.signing_public_key = signing_key.public_key;
    out.signer_fingerprint = fingerprint_of(signing_key.public_key);
    return out;
}

Point verify_server_param(const SignedServerParam& param, const Fingerprint& pinned_fingerprint,
                          const SignatureScheme& scheme) {
    auto actual = fingerprint_of(param.signing_public_key);
    if (!constant_time_equal(actual, pinned_fingerprint) ||
        !constant_time_equal(param.signer_fingerprint, pinned_fingerprint)) {
        throw TunnelError(ErrorCode::FingerprintMismatch, "signing key is not the pinned key");
    }
    if (!scheme.verify(param.signing_public_key, param.q_point, param.signature)) {
        throw TunnelError(ErrorCode::SignatureInvalid, "signature over Q does not verify");
    }
    return param.q_point;
}

}  // namespace tunnel::crypto
