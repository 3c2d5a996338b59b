#include "tunnel/client.hpp"

#include <limits>

#include "json_util.hpp"
#include "tunnel/forms.hpp"
#include "tunnel/wire.hpp"

namespace tunnel {

using detail::Json;

std::string_view to_string(ClientState state) {
    switch (state) {
        case ClientState::Handshaking: return "Handshaking";
        case ClientState::Active: return "Active";
        case ClientState::Refreshing: return "Refreshing";
        case ClientState::Closed: return "Closed";
    }
    return "?";
}

std::string ClientSessionData::to_json() const {
    Json j{{"uid", uid_to_hex(uid)},
           {"key", base64_encode(key.bytes())},
           {"q", base64_encode(q_point)},
           {"fingerprint", hex_encode(fingerprint)}};
    return j.dump();
}

ClientSessionData ClientSessionData::from_json(std::string_view json) {
    auto j = detail::parse_json(json);
    ClientSessionData d;
    d.uid = uid_from_hex(detail::string_field(j, "uid"));
    d.key = crypto::SessionKey(to_fixed<crypto::kKeySize>(detail::base64_field(j, "key")));
    d.q_point = to_fixed<crypto::kPointSize>(detail::base64_field(j, "q"));
    d.fingerprint = to_fixed<32>(hex_decode(detail::string_field(j, "fingerprint")));
    return d;
}

namespace {

bool is_packet(const HttpResponse& response) {
    auto ct = response.header("Content-Type");
    return response.status == 200 && ct && media_type(*ct) == kPacketContentType;
}

std::optional<ErrorCode> plain_error_code(const HttpResponse& response) {
    auto j = Json::parse(response.body.begin(), response.body.end(), nullptr, false);
    if (!j.is_object() || !j.contains("code") || !j["code"].is_number_integer()) return std::nullopt;
    return error_code_from_int(j["code"].get<int>());
}

std::optional<ErrorCode> tunnel_error_code(const InnerMessage& msg) {
    auto value = msg.header(kTunnelErrorHeader);
    if (!value) return std::nullopt;
    try {
        return error_code_from_int(std::stoi(*value)).value_or(ErrorCode::ServerError);
    } catch (const std::exception&) {
        return ErrorCode::ServerError;
    }
}

std::string error_message(const InnerMessage& msg) {
    auto j = Json::parse(msg.body.begin(), msg.body.end(), nullptr, false);
    if (j.is_object() && j.contains("message") && j["message"].is_string()) return j["message"].get<std::string>();
    return msg.start_line;
}

}  // namespace

TunnelClient::TunnelClient(std::shared_ptr<Transport> transport, crypto::Fingerprint pinned_fingerprint,
                           RandomSource& rng, Clock clock)
    : transport_(std::move(transport)),
      pinned_(pinned_fingerprint),
      rng_(rng),
      clock_(std::move(clock)) {}

void TunnelClient::handshake() {
    {
        std::lock_guard lock(mutex_);
        state_ = ClientState::Handshaking;
    }
    auto got = transport_->round_trip(HttpRequest{"GET", "/tunnel/key", {}, {}, {}});
    if (got.status != 200) throw_plain_error(got);
    auto param = server_param_from_json(to_string(got.body));
    auto q = crypto::verify_server_param(param, pinned_);

    auto keypair = crypto::generate_ephemeral_keypair(rng_);
    auto z = crypto::ecdh_shared_secret(keypair, q);
    auto posted = transport_->round_trip(
        HttpRequest{"POST", "/tunnel/key", detail::json_content_type(),
                    detail::dump_json(Json{{"v", base64_encode(keypair.public_point)}}), {}});
    if (posted.status != 200) throw_plain_error(posted);
    auto uid = to_fixed<kUidSize>(detail::base64_field(detail::parse_json(posted.body), "uid"));

    std::lock_guard lock(mutex_);
    uid_ = uid;
    q_point_ = q;
    key_ = crypto::derive_tunnel_key(z, pinned_);
    ++key_epoch_;
    state_ = ClientState::Active;
}

void TunnelClient::resume(const ClientSessionData& data) {
    if (!constant_time_equal(data.fingerprint, pinned_)) {
        throw TunnelError(ErrorCode::FingerprintMismatch, "stored session was pinned to another key");
    }
    std::lock_guard lock(mutex_);
    uid_ = data.uid;
    key_ = data.key;
    q_point_ = data.q_point;
    ++key_epoch_;
    state_ = ClientState::Active;
}

ClientSessionData TunnelClient::session_data() const {
    std::lock_guard lock(mutex_);
    return ClientSessionData{uid_, key_, q_point_, pinned_};
}

std::size_t TunnelClient::pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

ClientState TunnelClient::state() const {
    std::lock_guard lock(mutex_);
    return state_;
}

Uid TunnelClient::uid() const {
    std::lock_guard lock(mutex_);
    return uid_;
}

crypto::SessionKey TunnelClient::key() const {
    std::lock_guard lock(mutex_);
    return key_;
}

void TunnelClient::set_outer_cookie(std::string name, std::string value) {
    std::lock_guard lock(mutex_);
    outer_cookies_.emplace_back(std::move(name), std::move(value));
}

void TunnelClient::throw_plain_error(const HttpResponse& response) const {
    if (auto code = plain_error_code(response)) {
        auto j = Json::parse(response.body.begin(), response.body.end(), nullptr, false);
        std::string message = j.value("message", std::string(error_name(*code)));
        throw TunnelError(*code, message);
    }
    throw TunnelError(ErrorCode::ServerError, "unexpected HTTP " + std::to_string(response.status));
}

InnerMessage TunnelClient::open_response(const crypto::SessionKey& key, const HttpResponse& response) {
    Uid uid;
    {
        std::lock_guard lock(mutex_);
        uid = uid_;
    }
    auto pkt = TunnelPacket::from_body(uid, response.body);
    constexpr std::int64_t kUnbounded = std::numeric_limits<std::int32_t>::max();
    auto env = open_envelope(
        key, pkt, clock_(),
        [&](const Nonce& n) { return !response_nonces_.check_and_record(uid, n, clock_()); },
        ReplayWindow{kUnbounded, kUnbounded, 0});
    return std::move(env.inner);
}

TunnelClient::Transmitted TunnelClient::transmit(const crypto::SessionKey& key, const InnerMessage& request) {
    Uid uid;
    HeaderList outer_cookies;
    {
        std::lock_guard lock(mutex_);
        uid = uid_;
        outer_cookies = outer_cookies_;
    }
    SealedEnvelope env;
    env.timestamp = clock_();
    env.nonce = rng_.draw<kNonceSize>();
    env.inner = request;
    for (const auto& value : find_all_headers(request.headers, "Cookie")) {
        for (auto& pair : parse_cookie_header(value).pairs()) env.cookies.push_back(std::move(pair));
    }
    remove_headers(env.inner.headers, "Cookie");
    auto pkt = seal_envelope(key, uid, env, rng_);

    HttpRequest http{"POST", "/tunnel/data",
                     {{std::string(kUidHeader), uid_to_hex(uid)}, {"Content-Type", std::string(kPacketContentType)}},
                     pkt.body(), {}};
    if (!outer_cookies.empty()) {
        CookieJar jar;
        for (auto& [name, value] : outer_cookies) jar.add(name, value);
        http.headers.emplace_back("Cookie", jar.serialize());
    }
    ++packets_sent_;
    auto response = transport_->round_trip(http);
    if (is_packet(response)) return Transmitted{false, open_response(key, response)};
    if (plain_error_code(response) == ErrorCode::KeyExpired) return Transmitted{true, {}};
    throw_plain_error(response);
}

std::future<InnerMessage> TunnelClient::enqueue_locked(const InnerMessage& request) {
    auto pending = std::make_shared<Pending>();
    pending->request = request;
    auto future = pending->done.get_future();
    queue_.push_back(std::move(pending));
    return future;
}

void TunnelClient::acquire_gate(std::unique_lock<std::mutex>& lock) {
    cv_.wait(lock, [&] { return state_ != ClientState::Refreshing; });
    if (state_ != ClientState::Active) throw TunnelError(ErrorCode::SessionClosed);
    state_ = ClientState::Refreshing;
    cv_.wait(lock, [&] { return in_flight_ == 0; });
}

void TunnelClient::flush_queue() {
    for (;;) {
        std::unique_lock lock(mutex_);
        if (queue_.empty()) {
            if (state_ == ClientState::Refreshing) state_ = ClientState::Active;
            cv_.notify_all();
            return;
        }
        auto pending = std::move(queue_.front());
        queue_.pop_front();
        auto key = key_;
        lock.unlock();
        try {
            auto sent = transmit(key, pending->request);
            if (sent.key_expired) throw TunnelError(ErrorCode::RefreshFailed, "key expired again during replay");
            pending->done.set_value(std::move(sent.response));
        } catch (...) {
            pending->done.set_exception(std::current_exception());
        }
    }
}

void TunnelClient::close_with(ErrorCode code) {
    std::deque<std::shared_ptr<Pending>> failed;
    {
        std::lock_guard lock(mutex_);
        state_ = ClientState::Closed;
        failed.swap(queue_);
        cv_.notify_all();
    }
    for (auto& p : failed) p->done.set_exception(std::make_exception_ptr(TunnelError(code)));
}

crypto::SessionKey TunnelClient::perform_refresh(const crypto::SessionKey& current) {
    crypto::Point q;
    Uid uid;
    {
        std::lock_guard lock(mutex_);
        q = q_point_;
        uid = uid_;
    }
    auto keypair = crypto::generate_ephemeral_keypair(rng_);
    auto new_key = crypto::derive_tunnel_key(crypto::ecdh_shared_secret(keypair, q), pinned_);

    SealedEnvelope env;
    env.timestamp = clock_();
    env.nonce = rng_.draw<kNonceSize>();
    env.inner = InnerMessage::request("PUT", "/tunnel/key", detail::json_content_type(),
                                      detail::dump_json(Json{{"v", base64_encode(keypair.public_point)}}));
    auto pkt = seal_envelope(current, uid, env, rng_);
    ++packets_sent_;
    auto response = transport_->round_trip(HttpRequest{
        "PUT", "/tunnel/key",
        {{std::string(kUidHeader), uid_to_hex(uid)}, {"Content-Type", std::string(kPacketContentType)}},
        pkt.body(), {}});
    if (!is_packet(response)) throw_plain_error(response);

    InnerMessage inner;
    try {
        inner = open_response(new_key, response);
    } catch (const TunnelError& e) {
        if (e.code() != ErrorCode::AuthenticationFailure) throw;
        // Refusals are sealed under the key the request used.
        inner = open_response(current, response);
    }
    if (auto code = tunnel_error_code(inner)) throw TunnelError(*code, error_message(inner));
    return new_key;
}

InnerMessage TunnelClient::exchange(const InnerMessage& request) {
    std::unique_lock lock(mutex_);
    for (;;) {
        if (state_ == ClientState::Closed || state_ == ClientState::Handshaking) {
            throw TunnelError(ErrorCode::SessionClosed, std::string(to_string(state_)));
        }
        if (state_ == ClientState::Refreshing) {
            auto future = enqueue_locked(request);
            lock.unlock();
            return future.get();
        }

        auto key = key_;
        auto epoch = key_epoch_;
        ++in_flight_;
        lock.unlock();
        Transmitted sent;
        try {
            sent = transmit(key, request);
        } catch (...) {
            lock.lock();
            --in_flight_;
            cv_.notify_all();
            throw;
        }
        lock.lock();
        --in_flight_;
        cv_.notify_all();
        if (!sent.key_expired) return std::move(sent.response);
        if (epoch != key_epoch_) continue;
        if (state_ == ClientState::Refreshing) {
            auto future = enqueue_locked(request);
            lock.unlock();
            return future.get();
        }
        if (state_ != ClientState::Active) continue;

        // This caller performs the single refresh; everyone else queues behind it.
        state_ = ClientState::Refreshing;
        cv_.wait(lock, [&] { return in_flight_ == 0; });
        auto current = key_;
        lock.unlock();
        crypto::SessionKey fresh;
        try {
            fresh = perform_refresh(current);
        } catch (const TunnelError& e) {
            close_with(ErrorCode::RefreshFailed);
            throw TunnelError(ErrorCode::RefreshFailed, e.what());
        }
        lock.lock();
        key_ = fresh;
        ++key_epoch_;
        lock.unlock();

        InnerMessage own;
        std::exception_ptr failure;
        try {
            auto again = transmit(fresh, request);
            if (again.key_expired) throw TunnelError(ErrorCode::RefreshFailed, "new key rejected as expired");
            own = std::move(again.response);
        } catch (...) {
            failure = std::current_exception();
        }
        flush_queue();
        if (failure) std::rethrow_exception(failure);
        return own;
    }
}

InnerMessage TunnelClient::check_tunnel_error(InnerMessage response) {
    auto code = tunnel_error_code(response);
    if (!code) {
        window_errors_ = 0;
        return response;
    }
    if (*code == ErrorCode::StalePacket || *code == ErrorCode::FutureTimestamp) {
        if (++window_errors_ >= 2) {
            throw TunnelError(ErrorCode::ClockSkewSuspected,
                              "repeated " + std::string(error_name(*code)) + "; check the local clock");
        }
    }
    throw TunnelError(*code, error_message(response));
}

InnerMessage TunnelClient::send(const InnerMessage& request) { return check_tunnel_error(exchange(request)); }

void TunnelClient::refresh() {
    std::unique_lock lock(mutex_);
    acquire_gate(lock);
    auto current = key_;
    lock.unlock();
    crypto::SessionKey fresh;
    try {
        fresh = perform_refresh(current);
    } catch (const TunnelError& e) {
        close_with(ErrorCode::RefreshFailed);
        throw TunnelError(ErrorCode::RefreshFailed, e.what());
    }
    lock.lock();
    key_ = fresh;
    ++key_epoch_;
    lock.unlock();
    flush_queue();
}

SrpChallenge TunnelClient::request_challenge(std::string_view identity) {
    auto response = send(InnerMessage::request("POST", "/auth/info", detail::json_content_type(),
                                               detail::dump_json(Json{{"username", std::string(identity)}})));
    auto j = detail::parse_json(response.body);
    auto modulus = BigNum::from_bytes(detail::base64_field(j, "modulus"));
    auto generator = BigNum::from_bytes(detail::base64_field(j, "generator"));
    if (modulus != srp::standard_modulus() || generator != srp::standard_generator()) {
        throw TunnelError(ErrorCode::UntrustedGroup, "server offered an unknown SRP group");
    }
    return SrpChallenge{srp::SrpParams::standard(detail::base64_field(j, "salt")),
                        BigNum::from_bytes(detail::base64_field(j, "challenge"))};
}

InnerMessage TunnelClient::complete_login(const srp::ClientResponse& response) {
    std::unique_lock lock(mutex_);
    acquire_gate(lock);
    auto key = key_;
    lock.unlock();
    InnerMessage accepted;
    try {
        auto width = response.state.params.width();
        auto body = Json{{"client_ephemeral", base64_encode(response.public_c.to_bytes_padded(width))},
                         {"client_proof", base64_encode(response.proof)}};
        auto sent = transmit(key, InnerMessage::request("POST", "/auth", detail::json_content_type(),
                                                        detail::dump_json(body)));
        if (sent.key_expired) throw TunnelError(ErrorCode::KeyExpired, "refresh before logging in");
        if (auto code = tunnel_error_code(sent.response)) {
            if (*code == ErrorCode::ProofMismatch) throw TunnelError(ErrorCode::ProofRejected, "wrong password");
            throw TunnelError(*code, error_message(sent.response));
        }
        Bytes proof;
        try {
            proof = detail::base64_field(detail::parse_json(sent.response.body), "server_proof");
        } catch (const TunnelError&) {
            throw TunnelError(ErrorCode::ServerProofInvalid, "missing server proof");
        }
        if (proof.size() != std::tuple_size_v<crypto::Digest>) {
            throw TunnelError(ErrorCode::ServerProofInvalid, "server proof has the wrong size");
        }
        srp::client_verify_server(response.state, to_fixed<32>(proof));
        lock.lock();
        key_ = crypto::derive_srp_session_key(response.state.secret_k);
        ++key_epoch_;
        lock.unlock();
        accepted = std::move(sent.response);
    } catch (...) {
        flush_queue();
        throw;
    }
    flush_queue();
    return accepted;
}

InnerMessage TunnelClient::login(std::string_view identity, std::string_view password) {
    auto challenge = request_challenge(identity);
    auto response = srp::client_respond(challenge.params, identity, password, challenge.server_s, rng_);
    return complete_login(response);
}

}  // namespace tunnel
