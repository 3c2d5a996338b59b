#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>

#include "tunnel/bytes.hpp"

struct bignum_st;

namespace tunnel {

/// Non-negative arbitrary precision integer backed by OpenSSL BIGNUM.
class BigNum {
public:
    BigNum();
    explicit BigNum(std::uint64_t value);
    BigNum(const BigNum& other);
    BigNum(BigNum&&) noexcept;
    BigNum& operator=(const BigNum& other);
    BigNum& operator=(BigNum&&) noexcept;
    ~BigNum();

    static BigNum from_bytes(ByteView big_endian);
    static BigNum from_hex(std::string_view hex);

    /// Minimal big-endian encoding; zero encodes as an empty vector.
    Bytes to_bytes() const;
    /// Big-endian, left-padded with zeros to exactly `width` bytes.
    Bytes to_bytes_padded(std::size_t width) const;
    std::string to_hex() const;

    bool is_zero() const;
    std::size_t num_bytes() const;

    BigNum mod(const BigNum& m) const;
    BigNum mod_add(const BigNum& other, const BigNum& m) const;
    BigNum mod_sub(const BigNum& other, const BigNum& m) const;
    BigNum mod_mul(const BigNum& other, const BigNum& m) const;
    /// Constant-time exponentiation.
    BigNum mod_exp(const BigNum& exponent, const BigNum& m) const;
    BigNum add(const BigNum& other) const;
    BigNum mul(const BigNum& other) const;

    friend bool operator==(const BigNum& a, const BigNum& b);
    friend std::strong_ordering operator<=>(const BigNum& a, const BigNum& b);

    const bignum_st* raw() const noexcept { return bn_.get(); }

private:
    struct Deleter {
        void operator()(bignum_st* bn) const noexcept;
    };
    std::unique_ptr<bignum_st, Deleter> bn_;
};

}  // namespace tunnel
