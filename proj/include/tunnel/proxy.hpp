#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "tunnel/client.hpp"

namespace tunnel {

struct ProxyConfig {
    std::string listen_address = "127.0.0.1:8081";
    std::string upstream_address;
    crypto::Fingerprint pinned_fingerprint{};
    /// Enables the inline SRP MITM. Without it /auth is passed through and
    /// traffic after a login can no longer be read.
    std::optional<std::string> user_password;
    bool log_plaintext = false;
};

using LogSink = std::function<void(const std::string&)>;

/// Writes each line to stderr.
LogSink stderr_log();

/// Plaintext-in, tunnel-out compatibility proxy over one shared upstream session.
class TunnelProxy {
public:
    TunnelProxy(ProxyConfig config, std::shared_ptr<Transport> upstream, RandomSource& rng,
                Clock clock = system_clock(), LogSink log = stderr_log());

    /// Upstream handshake. Throws UpstreamHandshakeFailed.
    void start();

    /// Answers one plaintext downstream request.
    HttpResponse handle(const HttpRequest& request);
    HttpHandler handler();

    /// POST /auth/info in MITM mode: forwards upstream, answers with an emulated challenge.
    HttpResponse mitm_auth_info(const HttpRequest& request);
    /// POST /auth in MITM mode: checks the downstream proof, then logs in upstream.
    HttpResponse mitm_auth(const HttpRequest& request);

    TunnelClient& upstream() { return client_; }
    const ProxyConfig& config() const { return config_; }

private:
    struct PendingLogin {
        std::string identity;
        SrpChallenge upstream;
        srp::SrpState emulated;
    };

    HttpResponse forward(const HttpRequest& request);
    void log_request(const HttpRequest& request);
    void log_response(const InnerMessage& response);

    ProxyConfig config_;
    RandomSource& rng_;
    Clock clock_;
    LogSink log_;
    TunnelClient client_;
    std::mutex logins_mutex_;
    std::map<std::string, PendingLogin> logins_;  // keyed by downstream peer
};

}  // namespace tunnel
