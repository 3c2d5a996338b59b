#include "tunnel/proxy.hpp"

#include <iostream>

#include "json_util.hpp"
#include "tunnel/server.hpp"

namespace tunnel {

using detail::Json;

namespace {

constexpr std::string_view kHopByHop[] = {"Connection", "Keep-Alive", "Content-Length", "Transfer-Encoding",
                                          "Host", "Proxy-Connection", "Upgrade", "TE"};

HeaderList without_hop_by_hop(HeaderList headers) {
    for (auto name : kHopByHop) remove_headers(headers, name);
    return headers;
}

HttpResponse to_http(const InnerMessage& inner) {
    return HttpResponse{inner.status(), without_hop_by_hop(inner.headers), inner.body};
}

HttpResponse error_response(ErrorCode code, std::string_view message) { return to_http(inner_error(code, message)); }

std::string printable(ByteView body) {
    std::string out;
    for (auto b : body) {
        if (b >= 0x20 && b < 0x7f && b != '\\') {
            out.push_back(static_cast<char>(b));
        } else {
            static constexpr char digits[] = "0123456789abcdef";
            out += "\\x";
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0xf]);
        }
    }
    return out;
}

}  // namespace

LogSink stderr_log() {
    return [](const std::string& line) { std::cerr << line << '\n'; };
}

TunnelProxy::TunnelProxy(ProxyConfig config, std::shared_ptr<Transport> upstream, RandomSource& rng, Clock clock,
                         LogSink log)
    : config_(std::move(config)),
      rng_(rng),
      clock_(clock),
      log_(std::move(log)),
      client_(std::move(upstream), config_.pinned_fingerprint, rng, clock) {}

void TunnelProxy::start() {
    try {
        client_.handshake();
    } catch (const std::exception& e) {
        throw TunnelError(ErrorCode::UpstreamHandshakeFailed, e.what());
    }
    if (config_.log_plaintext) {
        log_(std::to_string(clock_()) + " == " + uid_to_hex(client_.uid()) + " key " +
             hex_encode(client_.key().bytes()));
    }
}

HttpHandler TunnelProxy::handler() {
    return [this](const HttpRequest& request) { return handle(request); };
}

void TunnelProxy::log_request(const HttpRequest& request) {
    std::string line = std::to_string(clock_()) + " >> " + uid_to_hex(client_.uid()) + " " + request.method + " " +
                       request.target;
    if (config_.log_plaintext && !request.body.empty()) line += " " + printable(request.body);
    log_(line);
}

void TunnelProxy::log_response(const InnerMessage& response) {
    std::string line = std::to_string(clock_()) + " << " + uid_to_hex(client_.uid()) + " " + response.start_line;
    if (config_.log_plaintext && !response.body.empty()) line += " " + printable(response.body);
    log_(line);
}

HttpResponse TunnelProxy::handle(const HttpRequest& request) {
    try {
        if (config_.user_password && request.method == "POST") {
            auto path = request.path();
            if (path == "/auth/info") return mitm_auth_info(request);
            if (path == "/auth") return mitm_auth(request);
        }
        return forward(request);
    } catch (const TunnelError& e) {
        log_(std::to_string(clock_()) + " !! " + uid_to_hex(client_.uid()) + " " + std::string(error_name(e.code())) +
             " " + e.what());
        return error_response(e.code(), e.what());
    } catch (const std::exception& e) {
        return error_response(ErrorCode::Internal, e.what());
    }
}

HttpResponse TunnelProxy::forward(const HttpRequest& request) {
    log_request(request);
    auto inner = InnerMessage::request(request.method, request.target, without_hop_by_hop(request.headers),
                                       request.body);
    auto response = client_.exchange(inner);
    log_response(response);
    return to_http(response);
}

HttpResponse TunnelProxy::mitm_auth_info(const HttpRequest& request) {
    if (!config_.user_password) throw TunnelError(ErrorCode::PasswordRequired);
    log_request(request);
    auto identity = detail::string_field(detail::parse_json(request.body), "username");
    auto real = client_.exchange(InnerMessage::request("POST", "/auth/info", without_hop_by_hop(request.headers),
                                                       request.body));
    if (real.header(kTunnelErrorHeader) || real.status() != 200) {
        log_response(real);
        return to_http(real);
    }
    auto j = detail::parse_json(real.body);
    auto params = srp::SrpParams::standard(detail::base64_field(j, "salt"));
    if (BigNum::from_bytes(detail::base64_field(j, "modulus")) != params.modulus ||
        BigNum::from_bytes(detail::base64_field(j, "generator")) != params.generator) {
        throw TunnelError(ErrorCode::UntrustedGroup, "upstream offered an unknown SRP group");
    }
    SrpChallenge upstream{params, BigNum::from_bytes(detail::base64_field(j, "challenge"))};

    // Emulated server: same group and salt, verifier from the configured password.
    auto verifier = srp::make_verifier(params, identity, *config_.user_password);
    auto emulated = srp::server_challenge(params, verifier, rng_);
    j["challenge"] = base64_encode(emulated.own_public.to_bytes_padded(params.width()));
    {
        std::lock_guard lock(logins_mutex_);
        logins_[request.peer] = PendingLogin{identity, std::move(upstream), std::move(emulated)};
    }
    auto response = InnerMessage::response(real.status(), real.headers, detail::dump_json(j));
    log_response(response);
    return to_http(response);
}

HttpResponse TunnelProxy::mitm_auth(const HttpRequest& request) {
    if (!config_.user_password) throw TunnelError(ErrorCode::PasswordRequired);
    log_request(request);
    PendingLogin login;
    {
        std::lock_guard lock(logins_mutex_);
        auto it = logins_.find(request.peer);
        if (it == logins_.end()) throw TunnelError(ErrorCode::NoLoginInProgress);
        login = std::move(it->second);
        logins_.erase(it);
    }
    auto j = detail::parse_json(request.body);
    auto client_c = BigNum::from_bytes(detail::base64_field(j, "client_ephemeral"));
    auto client_proof = to_fixed<32>(detail::base64_field(j, "client_proof"));

    srp::ServerResult downstream;
    try {
        downstream = srp::server_verify(login.emulated, client_c, client_proof);
    } catch (const TunnelError& e) {
        if (e.code() != ErrorCode::ProofMismatch) throw;
        throw TunnelError(ErrorCode::ClientProofInvalid, "downstream client proof does not verify");
    }

    auto upstream_response = srp::client_respond(login.upstream.params, login.identity, *config_.user_password,
                                                 login.upstream.server_s, rng_);
    InnerMessage accepted;
    try {
        accepted = client_.complete_login(upstream_response);
    } catch (const TunnelError& e) {
        if (e.code() != ErrorCode::ProofRejected && e.code() != ErrorCode::ServerProofInvalid) throw;
        throw TunnelError(ErrorCode::UpstreamProofInvalid, e.what());
    }
    if (config_.log_plaintext) {
        log_(std::to_string(clock_()) + " == " + uid_to_hex(client_.uid()) + " key " +
             hex_encode(client_.key().bytes()));
    }
    auto body = detail::dump_json(Json{{"server_proof", base64_encode(downstream.server_proof)}});
    auto response = InnerMessage::response(200, accepted.headers, body);
    log_response(response);
    return to_http(response);
}

}  // namespace tunnel
