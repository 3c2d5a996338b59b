#include "tunnel/packet.hpp"

#include <charconv>

#include "tunnel/forms.hpp"

namespace tunnel {

std::string uid_to_hex(const Uid& uid) { return hex_encode(uid); }

Uid uid_from_hex(std::string_view hex) {
    if (hex.size() != 2 * kUidSize) throw TunnelError(ErrorCode::UnknownSession, "malformed uid");
    try {
        return to_fixed<kUidSize>(hex_decode(hex));
    } catch (const TunnelError&) {
        throw TunnelError(ErrorCode::UnknownSession, "malformed uid");
    }
}

Bytes TunnelPacket::body() const {
    return concat({iv, ciphertext, tag});
}

TunnelPacket TunnelPacket::from_body(const Uid& uid, ByteView body) {
    if (body.size() < crypto::kIvSize + crypto::kTagSize) {
        throw TunnelError(ErrorCode::AuthenticationFailure, "packet too short");
    }
    TunnelPacket pkt;
    pkt.uid = uid;
    std::copy_n(body.begin(), crypto::kIvSize, pkt.iv.begin());
    auto ct = body.subspan(crypto::kIvSize, body.size() - crypto::kIvSize - crypto::kTagSize);
    pkt.ciphertext.assign(ct.begin(), ct.end());
    std::copy_n(body.end() - static_cast<std::ptrdiff_t>(crypto::kTagSize), crypto::kTagSize, pkt.tag.begin());
    return pkt;
}

Bytes encode_envelope(const SealedEnvelope& env) {
    InnerMessage msg = env.inner;
    HeaderList headers;
    headers.reserve(msg.headers.size() + 3);
    headers.emplace_back(std::string(kTimestampHeader), std::to_string(env.timestamp));
    headers.emplace_back(std::string(kNonceHeader), hex_encode(env.nonce));
    if (!env.cookies.empty()) {
        CookieJar jar;
        for (const auto& [n, v] : env.cookies) jar.add(n, v);
        headers.emplace_back("Cookie", jar.serialize());
    }
    headers.insert(headers.end(), msg.headers.begin(), msg.headers.end());
    msg.headers = std::move(headers);
    return encode_inner(msg);
}

SealedEnvelope decode_envelope(ByteView plaintext) {
    auto msg = decode_inner(plaintext);
    SealedEnvelope env;

    auto ts = find_header(msg.headers, kTimestampHeader);
    auto nonce = find_header(msg.headers, kNonceHeader);
    if (!ts || !nonce) throw TunnelError(ErrorCode::MalformedEnvelope, "missing timestamp or nonce");
    auto [ptr, ec] = std::from_chars(ts->data(), ts->data() + ts->size(), env.timestamp);
    if (ec != std::errc{} || ptr != ts->data() + ts->size()) {
        throw TunnelError(ErrorCode::MalformedEnvelope, "timestamp is not a decimal integer");
    }
    if (nonce->size() != 2 * kNonceSize) throw TunnelError(ErrorCode::MalformedEnvelope, "nonce size");
    try {
        env.nonce = to_fixed<kNonceSize>(hex_decode(*nonce));
    } catch (const TunnelError&) {
        throw TunnelError(ErrorCode::MalformedEnvelope, "nonce encoding");
    }
    for (const auto& value : find_all_headers(msg.headers, "Cookie")) {
        for (auto& pair : parse_cookie_header(value).pairs()) env.cookies.push_back(std::move(pair));
    }
    remove_headers(msg.headers, kTimestampHeader);
    remove_headers(msg.headers, kNonceHeader);
    remove_headers(msg.headers, "Cookie");
    env.inner = std::move(msg);
    return env;
}

TunnelPacket seal_envelope(const crypto::SessionKey& key, const Uid& uid, const SealedEnvelope& env,
                           RandomSource& rng) {
    TunnelPacket pkt;
    pkt.uid = uid;
    pkt.iv = rng.draw<crypto::kIvSize>();
    auto sealed = crypto::seal(key, pkt.iv, encode_envelope(env));
    pkt.ciphertext = std::move(sealed.ciphertext);
    pkt.tag = sealed.tag;
    return pkt;
}

SealedEnvelope open_envelope(const crypto::SessionKey& key, const TunnelPacket& pkt, std::int64_t now,
                             const NonceSeen& nonce_seen, const ReplayWindow& window) {
    auto plaintext = crypto::open(key, pkt.iv, pkt.ciphertext, pkt.tag);
    auto env = decode_envelope(plaintext);
    if (env.timestamp > now + window.future_skew) {
        throw TunnelError(ErrorCode::FutureTimestamp, "timestamp ahead of server clock");
    }
    if (now - env.timestamp > window.max_age || env.timestamp < window.not_before) {
        throw TunnelError(ErrorCode::StalePacket, "packet outside the validity window");
    }
    if (nonce_seen && nonce_seen(env.nonce)) {
        throw TunnelError(ErrorCode::ReplayDetected, "nonce already used");
    }
    return env;
}

}  // namespace tunnel
