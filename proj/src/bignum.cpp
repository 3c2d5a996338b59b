#include "tunnel/bignum.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>

#include "openssl_util.hpp"

namespace tunnel {

namespace {

[[noreturn]] void bn_failure(const char* what) {
    throw TunnelError(ErrorCode::Internal, std::string("BIGNUM: ") + what);
}

BIGNUM* fresh() {
    BIGNUM* bn = BN_new();
    if (bn == nullptr) bn_failure("allocation");
    return bn;
}

detail::BnCtxPtr make_ctx() {
    detail::BnCtxPtr ctx(BN_CTX_new());
    if (!ctx) bn_failure("context");
    return ctx;
}

}  // namespace

void BigNum::Deleter::operator()(bignum_st* bn) const noexcept { BN_clear_free(bn); }

BigNum::BigNum() : bn_(fresh()) {}

BigNum::BigNum(std::uint64_t value) : bn_(fresh()) {
    if (BN_set_word(bn_.get(), value) != 1) bn_failure("set_word");
}

BigNum::BigNum(const BigNum& other) : bn_(BN_dup(other.bn_.get())) {
    if (!bn_) bn_failure("dup");
}

BigNum::BigNum(BigNum&& other) noexcept : bn_(std::move(other.bn_)) {}

BigNum& BigNum::operator=(const BigNum& other) {
    if (this != &other) {
        if (!bn_) bn_.reset(fresh());
        if (BN_copy(bn_.get(), other.bn_.get()) == nullptr) bn_failure("copy");
    }
    return *this;
}

BigNum& BigNum::operator=(BigNum&& other) noexcept {
    bn_ = std::move(other.bn_);
    return *this;
}

BigNum::~BigNum() = default;

BigNum BigNum::from_bytes(ByteView big_endian) {
    BigNum out;
    if (BN_bin2bn(big_endian.data(), static_cast<int>(big_endian.size()), out.bn_.get()) == nullptr) {
        bn_failure("bin2bn");
    }
    return out;
}

BigNum BigNum::from_hex(std::string_view hex) { return from_bytes(hex_decode(hex)); }

Bytes BigNum::to_bytes() const {
    Bytes out(static_cast<std::size_t>(BN_num_bytes(bn_.get())));
    BN_bn2bin(bn_.get(), out.data());
    return out;
}

Bytes BigNum::to_bytes_padded(std::size_t width) const {
    Bytes out(width);
    if (BN_bn2binpad(bn_.get(), out.data(), static_cast<int>(width)) < 0) {
        throw TunnelError(ErrorCode::BadRequest, "integer wider than padding width");
    }
    return out;
}

std::string BigNum::to_hex() const { return hex_encode(to_bytes()); }

bool BigNum::is_zero() const { return BN_is_zero(bn_.get()) == 1; }

std::size_t BigNum::num_bytes() const { return static_cast<std::size_t>(BN_num_bytes(bn_.get())); }

BigNum BigNum::mod(const BigNum& m) const {
    auto ctx = make_ctx();
    BigNum out;
    if (BN_nnmod(out.bn_.get(), bn_.get(), m.bn_.get(), ctx.get()) != 1) bn_failure("nnmod");
    return out;
}

BigNum BigNum::mod_add(const BigNum& other, const BigNum& m) const {
    auto ctx = make_ctx();
    BigNum out;
    if (BN_mod_add(out.bn_.get(), bn_.get(), other.bn_.get(), m.bn_.get(), ctx.get()) != 1) bn_failure("mod_add");
    return out;
}

BigNum BigNum::mod_sub(const BigNum& other, const BigNum& m) const {
    auto ctx = make_ctx();
    BigNum out;
    if (BN_mod_sub(out.bn_.get(), bn_.get(), other.bn_.get(), m.bn_.get(), ctx.get()) != 1) bn_failure("mod_sub");
    return out;
}

BigNum BigNum::mod_mul(const BigNum& other, const BigNum& m) const {
    auto ctx = make_ctx();
    BigNum out;
    if (BN_mod_mul(out.bn_.get(), bn_.get(), other.bn_.get(), m.bn_.get(), ctx.get()) != 1) bn_failure("mod_mul");
    return out;
}

BigNum BigNum::mod_exp(const BigNum& exponent, const BigNum& m) const {
    auto ctx = make_ctx();
    BigNum exp(exponent);
    BN_set_flags(exp.bn_.get(), BN_FLG_CONSTTIME);
    BigNum out;
    if (BN_mod_exp(out.bn_.get(), bn_.get(), exp.bn_.get(), m.bn_.get(), ctx.get()) != 1) bn_failure("mod_exp");
    return out;
}

BigNum BigNum::add(const BigNum& other) const {
    BigNum out;
    if (BN_add(out.bn_.get(), bn_.get(), other.bn_.get()) != 1) bn_failure("add");
    return out;
}

BigNum BigNum::mul(const BigNum& other) const {
    auto ctx = make_ctx();
    BigNum out;
    if (BN_mul(out.bn_.get(), bn_.get(), other.bn_.get(), ctx.get()) != 1) bn_failure("mul");
    return out;
}

bool operator==(const BigNum& a, const BigNum& b) { return BN_cmp(a.bn_.get(), b.bn_.get()) == 0; }

std::strong_ordering operator<=>(const BigNum& a, const BigNum& b) {
    int c = BN_cmp(a.bn_.get(), b.bn_.get());
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

}  // namespace tunnel
