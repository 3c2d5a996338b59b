#include <catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"
#include "tunnel/bytes.hpp"
#include "tunnel/errors.hpp"

using namespace tunnel;

namespace {

std::vector<ErrorCode> all_codes() {
    std::vector<ErrorCode> out;
    for (int i = 0; i < 10000; ++i) {
        if (auto c = error_code_from_int(i)) out.push_back(*c);
    }
    return out;
}

}  // namespace

TEST_CASE("hex round trip and rejection") {
    fixtures::SeededRandom rng(1);
    for (std::size_t n : {0, 1, 16, 255}) {
        auto b = rng.draw(n);
        CHECK(hex_decode(hex_encode(b)) == b);
    }
    CHECK(hex_encode(Bytes{0x00, 0xab, 0xff}) == "00abff");
    CHECK(hex_decode("00ABff") == Bytes{0x00, 0xab, 0xff});
    CHECK_THROWS_AS(hex_decode("abc"), TunnelError);
    CHECK_THROWS_AS(hex_decode("zz"), TunnelError);
}

TEST_CASE("base64 round trip across padding lengths") {
    fixtures::SeededRandom rng(2);
    for (std::size_t n = 0; n < 40; ++n) {
        auto b = rng.draw(n);
        CHECK(base64_decode(base64_encode(b)) == b);
    }
    CHECK(base64_encode(to_bytes("foob")) == "Zm9vYg==");
    CHECK(to_string(base64_decode("Zm9vYmE=")) == "fooba");
    CHECK_THROWS_AS(base64_decode("abc"), TunnelError);
    CHECK_THROWS_AS(base64_decode("a$c="), TunnelError);
}

TEST_CASE("constant time comparison") {
    CHECK(constant_time_equal(Bytes{}, Bytes{}));
    CHECK(constant_time_equal(Bytes{1, 2}, Bytes{1, 2}));
    CHECK_FALSE(constant_time_equal(Bytes{1, 2}, Bytes{1, 3}));
    CHECK_FALSE(constant_time_equal(Bytes{1, 2}, Bytes{1, 2, 3}));
}

TEST_CASE("fixed-size conversion checks length") {
    CHECK(to_fixed<2>(Bytes{1, 2}) == FixedBytes<2>{1, 2});
    CHECK_THROWS_AS(to_fixed<2>(Bytes{1}), TunnelError);
}

TEST_CASE("every error has one name, one status and one exit code") {
    auto codes = all_codes();
    CHECK(codes.size() == 41);
    std::set<std::string_view> names;
    std::set<int> exits;
    for (auto c : codes) {
        names.insert(error_name(c));
        exits.insert(exit_code(c));
        auto status = http_status(c);
        CHECK(status >= 400);
        CHECK(status < 600);
        CHECK(exit_code(c) > 1);
        CHECK(exit_code(c) < 126);
        CHECK(error_code_from_int(static_cast<int>(c)) == c);
    }
    CHECK(names.size() == codes.size());
    CHECK(exits.size() == codes.size());
    CHECK_FALSE(error_code_from_int(42).has_value());
}

TEST_CASE("TunnelError carries its code") {
    TunnelError e(ErrorCode::ReplayDetected, "again");
    CHECK(e.code() == ErrorCode::ReplayDetected);
    CHECK(std::string(e.what()).find("again") != std::string::npos);
    CHECK(std::string(TunnelError(ErrorCode::StalePacket).what()).find("StalePacket") != std::string::npos);
}
