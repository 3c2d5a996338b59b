#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tunnel {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

template <std::size_t N>
using FixedBytes = std::array<std::uint8_t, N>;

Bytes to_bytes(std::string_view s);
std::string to_string(ByteView b);

std::string hex_encode(ByteView b);
/// Throws TunnelError(BadRequest) on odd length or non-hex characters.
Bytes hex_decode(std::string_view hex);

std::string base64_encode(ByteView b);
/// Throws TunnelError(BadRequest) on malformed input.
Bytes base64_decode(std::string_view text);

/// Compares in time independent of where the inputs differ.
bool constant_time_equal(ByteView a, ByteView b);

template <std::size_t N>
FixedBytes<N> to_fixed(ByteView b);

Bytes concat(std::initializer_list<ByteView> parts);

/// Injected entropy. Implementations must be safe to call from several threads.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    template <std::size_t N>
    FixedBytes<N> draw() {
        FixedBytes<N> out{};
        fill(out);
        return out;
    }
    Bytes draw(std::size_t n) {
        Bytes out(n);
        fill(out);
        return out;
    }
};

/// OpenSSL CSPRNG.
class SystemRandom final : public RandomSource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

SystemRandom& system_random();

}  // namespace tunnel

#include "tunnel/errors.hpp"

namespace tunnel {

template <std::size_t N>
FixedBytes<N> to_fixed(ByteView b) {
    if (b.size() != N) {
        throw TunnelError(ErrorCode::BadRequest,
                          "expected " + std::to_string(N) + " bytes, got " + std::to_string(b.size()));
    }
    FixedBytes<N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

}  // namespace tunnel
