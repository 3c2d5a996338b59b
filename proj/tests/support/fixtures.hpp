#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include <json.hpp>
#include "tunnel/client.hpp"
#include "tunnel/server.hpp"

namespace fixtures {

using namespace tunnel;

/// Deterministic, thread-safe entropy for reproducible tests.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(std::uint64_t seed = 0x5eed) : gen_(seed) {}
    void fill(std::span<std::uint8_t> out) override {
        std::lock_guard lock(mutex_);
        for (auto& b : out) b = static_cast<std::uint8_t>(gen_());
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mutex mutex_;
    std::mt19937_64 gen_;
};

/// Hands out scripted bytes first, then falls back to `rest`.
class ScriptedRandom final : public RandomSource {
public:
    explicit ScriptedRandom(RandomSource& rest) : rest_(rest) {}
    void push(Bytes bytes) {
        std::lock_guard lock(mutex_);
        script_.push_back(std::move(bytes));
    }
    void fill(std::span<std::uint8_t> out) override {
        {
            std::lock_guard lock(mutex_);
            if (!script_.empty() && script_.front().size() == out.size()) {
                std::copy(script_.front().begin(), script_.front().end(), out.begin());
                script_.erase(script_.begin());
                return;
            }
        }
        rest_.fill(out);
    }

private:
    RandomSource& rest_;
    std::mutex mutex_;
    std::vector<Bytes> script_;
};

class ManualClock {
public:
    explicit ManualClock(std::int64_t start = 1'760'000'000) : now_(start) {}
    std::int64_t now() const { return now_.load(); }
    void set(std::int64_t t) { now_.store(t); }
    void advance(std::int64_t dt) { now_.fetch_add(dt); }
    Clock clock() {
        return [this] { return now_.load(); };
    }

private:
    std::atomic<std::int64_t> now_;
};

struct ServerKeys {
    crypto::SigningKeypair signing;
    crypto::Point ephemeral_secret{};
    crypto::SignedServerParam param;
    crypto::Fingerprint fingerprint{};
};

inline ServerKeys make_server_keys(RandomSource& rng) {
    ServerKeys k;
    k.signing = crypto::default_signature_scheme().generate(rng);
    k.ephemeral_secret = rng.draw<crypto::kPointSize>();
    auto eph = crypto::generate_ephemeral_keypair(k.ephemeral_secret);
    k.param = crypto::sign_server_param(k.signing, eph.public_point);
    k.fingerprint = crypto::fingerprint_of(k.signing.public_key);
    return k;
}

inline ServerConfig make_config(const ServerKeys& keys, RandomSource& rng,
                                const std::map<std::string, std::string>& users = {}) {
    ServerConfig cfg;
    cfg.signed_param = keys.param;
    cfg.server_ephemeral_secret = keys.ephemeral_secret;
    for (const auto& [id, pw] : users) cfg.users[id] = make_user_record(id, pw, rng);
    cfg.decoy_secret = rng.draw(32);
    return cfg;
}

/// Server plus in-process transport, with a controllable clock.
struct World {
    explicit World(std::map<std::string, std::string> users = {{"alice", "correct horse"}},
                   std::uint64_t seed = 7, bool enforce = true,
                   std::shared_ptr<InnerRouter> router = std::make_shared<DemoApi>())
        : rng(seed), keys(make_server_keys(rng)) {
        auto cfg = make_config(keys, rng, users);
        cfg.enforce_encryption = enforce;
        server = std::make_unique<TunnelServer>(std::move(cfg), rng, clock.clock(), std::move(router));
        transport = std::make_shared<LoopbackTransport>(server->handler());
    }

    std::unique_ptr<TunnelClient> client(std::shared_ptr<Transport> via = nullptr) {
        return std::make_unique<TunnelClient>(via ? via : transport, keys.fingerprint, rng, clock.clock());
    }

    std::unique_ptr<TunnelClient> connected() {
        auto c = client();
        c->handshake();
        return c;
    }

    SeededRandom rng;
    ManualClock clock;
    ServerKeys keys;
    std::unique_ptr<TunnelServer> server;
    std::shared_ptr<LoopbackTransport> transport;
};

/// Transport wrapper that lets a test rewrite requests or responses in flight.
class TappedTransport final : public Transport {
public:
    using RequestHook = std::function<void(HttpRequest&)>;
    using ResponseHook = std::function<void(const HttpRequest&, HttpResponse&)>;

    explicit TappedTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}
    HttpResponse round_trip(const HttpRequest& request) override {
        HttpRequest copy = request;
        if (on_request) on_request(copy);
        {
            std::lock_guard lock(mutex_);
            seen.push_back(copy);
        }
        auto response = inner_->round_trip(copy);
        if (on_response) on_response(copy, response);
        return response;
    }

    RequestHook on_request;
    ResponseHook on_response;
    std::mutex mutex_;
    std::vector<HttpRequest> seen;

private:
    std::shared_ptr<Transport> inner_;
};

/// Hand-rolled tunnel packet, for tests that need to control every field.
inline HttpRequest sealed_request(const crypto::SessionKey& key, const Uid& uid, const InnerMessage& inner,
                                  std::int64_t timestamp, RandomSource& rng, std::string target = "/tunnel/data",
                                  std::string method = "POST", HeaderList cookies = {}) {
    SealedEnvelope env{timestamp, rng.draw<kNonceSize>(), inner, std::move(cookies)};
    auto pkt = seal_envelope(key, uid, env, rng);
    return HttpRequest{std::move(method), std::move(target),
                       {{std::string(kUidHeader), uid_to_hex(uid)}, {"Content-Type", std::string(kPacketContentType)}},
                       pkt.body(), "test"};
}

inline bool is_sealed(const HttpResponse& r) {
    return r.status == 200 && r.header("Content-Type") == std::string(kPacketContentType);
}

/// Opens a sealed response without a replay check.
inline InnerMessage open_reply(const crypto::SessionKey& key, const Uid& uid, const HttpResponse& r,
                               std::int64_t now) {
    auto pkt = TunnelPacket::from_body(uid, r.body);
    return open_envelope(key, pkt, now, [](const Nonce&) { return false; }).inner;
}

/// Numeric code of a cleartext {code, message} error body, or -1.
inline int plain_code(const HttpResponse& r) {
    auto j = nlohmann::json::parse(r.body.begin(), r.body.end(), nullptr, false);
    if (!j.is_object() || !j.contains("code")) return -1;
    return j["code"].get<int>();
}

inline std::optional<ErrorCode> sealed_code(const InnerMessage& m) {
    auto v = m.header(kTunnelErrorHeader);
    if (!v) return std::nullopt;
    return error_code_from_int(std::stoi(*v));
}

/// Raw handshake against a server, returning the uid and the key the client derived.
inline std::pair<Uid, crypto::SessionKey> raw_handshake(TunnelServer& server, const crypto::Fingerprint& pin,
                                                        RandomSource& rng) {
    auto kp = crypto::generate_ephemeral_keypair(rng);
    auto uid = server.handle_post_tunnel_key(kp.public_point);
    auto q = crypto::verify_server_param(server.handle_get_tunnel_key(), pin);
    return {uid, crypto::derive_tunnel_key(crypto::ecdh_shared_secret(kp, q), pin)};
}

inline InnerMessage echo(std::string body, std::string target = "/api/echo") {
    return InnerMessage::request("POST", target, {{"Content-Type", "text/plain"}}, to_bytes(body));
}

}  // namespace fixtures
