#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "tunnel/forms.hpp"
#include "tunnel/http.hpp"
#include "tunnel/session.hpp"

namespace tunnel {

struct UserRecord {
    Bytes salt;
    BigNum verifier;
};

/// Registers a user: fresh salt and SRP verifier for the standard group.
UserRecord make_user_record(std::string_view identity, std::string_view password, RandomSource& rng);

struct ServerConfig {
    crypto::SignedServerParam signed_param;
    crypto::Point server_ephemeral_secret{};  // the signing key itself never reaches the server
    SessionConfig session{};
    std::map<std::string, UserRecord> users;
    bool enforce_encryption = true;
    /// Seeds the decoy salt and verifier returned for unknown identities.
    Bytes decoy_secret;
};

/// Request rebuilt by the middleware from the decrypted envelope and the outer headers.
struct InnerRequest {
    std::string method;
    std::string path;
    std::string version;
    std::vector<std::pair<std::string, std::string>> query_params;
    std::vector<std::pair<std::string, std::string>> form_fields;
    std::vector<FormPart> files;
    CookieJar cookies;
    HeaderList headers;
    Bytes body;

    std::optional<Uid> uid;
    bool encrypted = false;

    std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }

    /// `sealed` wins over `outer` for every shared header name, Cookie included.
    /// Throws MalformedFraming, MissingBoundary or UnterminatedPart.
    static InnerRequest build(const InnerMessage& sealed, const HeaderList& outer = {});
};

/// Application routes reached through the middleware.
class InnerRouter {
public:
    virtual ~InnerRouter() = default;
    virtual InnerMessage dispatch(const InnerRequest& request) = 0;
};

/// Test surface: /api/echo, /api/cookies and /api/form.
class DemoApi final : public InnerRouter {
public:
    InnerMessage dispatch(const InnerRequest& request) override;
};

/// JSON {code, message} body shared by encrypted and unencrypted errors.
Bytes error_body(ErrorCode code, std::string_view message);
/// Inner response for a tunnel-layer error; carries X-Tunnel-Error.
InnerMessage inner_error(ErrorCode code, std::string_view message = {});
/// Cleartext outer response for errors raised before a packet could be opened.
HttpResponse plain_error(ErrorCode code, std::string_view message = {});

/// The tunnel endpoint: key routes, the /tunnel/data middleware and the SRP routes.
class TunnelServer {
public:
    TunnelServer(ServerConfig config, RandomSource& rng, Clock clock,
                 std::shared_ptr<InnerRouter> router = std::make_shared<DemoApi>());

    HttpResponse handle(const HttpRequest& request);
    HttpHandler handler() {
        return [this](const HttpRequest& r) { return handle(r); };
    }

    const crypto::SignedServerParam& handle_get_tunnel_key() const noexcept { return config_.signed_param; }
    /// Throws LowOrderPoint; no session is created in that case.
    Uid handle_post_tunnel_key(const crypto::Point& client_v);
    HttpResponse handle_put_tunnel_key(const Uid& uid, ByteView packet_body);
    HttpResponse handle_tunnel_data(const Uid& uid, ByteView packet_body, const HeaderList& outer_headers = {});

    SessionStore& sessions() noexcept { return store_; }
    const ServerConfig& config() const noexcept { return config_; }
    InnerRouter& router() noexcept { return *router_; }
    std::int64_t now() const { return clock_(); }

private:
    struct Dispatched {
        InnerMessage response;
        std::optional<crypto::Digest> srp_secret;
    };

    HttpResponse handle_plaintext(const HttpRequest& request);
    Dispatched dispatch(const InnerRequest& request);
    Dispatched auth_info(const InnerRequest& request);
    Dispatched auth(const InnerRequest& request);
    NonceSeen nonce_guard(const Uid& uid, std::int64_t now);
    HttpResponse sealed_response(const crypto::SessionKey& key, const Uid& uid, const InnerMessage& inner);

    ServerConfig config_;
    RandomSource& rng_;
    Clock clock_;
    std::shared_ptr<InnerRouter> router_;
    crypto::EphemeralKeypair server_ephemeral_;
    SessionStore store_;
};

}  // namespace tunnel
