#include "tunnel/server.hpp"

#include "json_util.hpp"
#include "tunnel/wire.hpp"

namespace tunnel {

using detail::Json;

namespace {

constexpr std::string_view kDecoySaltLabel = "decoy-salt";
constexpr std::string_view kDecoyVerifierLabel = "decoy-verifier";

// Transport-only headers that must not leak into the rebuilt inner request.
HeaderList outer_headers_for_merge(const HeaderList& outer) {
    HeaderList out;
    for (const auto& h : outer) {
        if (iequals(h.first, kUidHeader) || iequals(h.first, "Content-Type") || iequals(h.first, "Content-Length")) {
            continue;
        }
        out.push_back(h);
    }
    return out;
}

std::vector<std::string_view> split_spaces(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto sp = s.find(' ', pos);
        if (sp == std::string_view::npos) sp = s.size();
        if (sp > pos) out.push_back(s.substr(pos, sp - pos));
        pos = sp + 1;
    }
    return out;
}

Json pairs_to_json(const std::vector<std::pair<std::string, std::string>>& pairs) {
    Json arr = Json::array();
    for (const auto& [n, v] : pairs) arr.push_back({n, v});
    return arr;
}

InnerMessage json_response(int status, const Json& body) {
    return InnerMessage::response(status, detail::json_content_type(), detail::dump_json(body));
}

}  // namespace

UserRecord make_user_record(std::string_view identity, std::string_view password, RandomSource& rng) {
    auto params = srp::SrpParams::standard(rng.draw(srp::kSaltBytes));
    auto verifier = srp::make_verifier(params, identity, password);
    return UserRecord{params.salt, verifier};
}

// --- errors ------------------------------------------------------------------

Bytes error_body(ErrorCode code, std::string_view message) {
    Json j;
    j["code"] = static_cast<int>(code);
    j["message"] = message.empty() ? std::string(error_name(code)) : std::string(message);
    return detail::dump_json(j);
}

InnerMessage inner_error(ErrorCode code, std::string_view message) {
    auto headers = detail::json_content_type();
    headers.emplace_back(std::string(kTunnelErrorHeader), std::to_string(static_cast<int>(code)));
    return InnerMessage::response(http_status(code), std::move(headers), error_body(code, message));
}

HttpResponse plain_error(ErrorCode code, std::string_view message) {
    return HttpResponse{http_status(code), detail::json_content_type(), error_body(code, message)};
}

// --- inner request -----------------------------------------------------------

InnerRequest InnerRequest::build(const InnerMessage& sealed, const HeaderList& outer) {
    auto parts = split_spaces(sealed.start_line);
    if (parts.size() != 3 || sealed.is_response()) {
        throw TunnelError(ErrorCode::MalformedFraming, "request line must be METHOD TARGET VERSION");
    }
    InnerRequest req;
    req.method = std::string(parts[0]);
    auto target = parts[1];
    req.version = std::string(parts[2]);
    auto q = target.find('?');
    req.path = std::string(target.substr(0, q));
    if (q != std::string_view::npos) req.query_params = parse_urlencoded(target.substr(q + 1));

    req.headers = merge_headers(outer, sealed.headers);
    for (const auto& value : find_all_headers(req.headers, "Cookie")) {
        req.cookies.append(parse_cookie_header(value));
    }
    req.body = sealed.body;
    if (auto ct = req.header("Content-Type")) {
        auto form = parse_form(req.body, *ct);
        for (auto& part : form.parts) {
            if (part.filename) {
                req.files.push_back(std::move(part));
            } else {
                req.form_fields.emplace_back(std::move(part.name), to_string(part.body));
            }
        }
    }
    return req;
}

// --- demo api ----------------------------------------------------------------

InnerMessage DemoApi::dispatch(const InnerRequest& request) {
    if (request.path == "/api/echo") {
        if (!request.body.empty()) {
            auto ct = request.header("Content-Type").value_or("application/octet-stream");
            return InnerMessage::response(200, {{"Content-Type", ct}}, request.body);
        }
        return json_response(200, Json{{"query", pairs_to_json(request.query_params)}});
    }
    if (request.path == "/api/cookies") {
        return json_response(200, Json{{"cookies", pairs_to_json(request.cookies.pairs())}});
    }
    if (request.path == "/api/form") {
        Json files = Json::array();
        for (const auto& f : request.files) {
            files.push_back({{"name", f.name},
                             {"filename", f.filename.value_or("")},
                             {"content_type", f.content_type.value_or("")},
                             {"size", f.body.size()},
                             {"sha256", hex_encode(crypto::hash(f.body))}});
        }
        return json_response(200, Json{{"fields", pairs_to_json(request.form_fields)},
                                       {"files", files},
                                       {"query", pairs_to_json(request.query_params)}});
    }
    return InnerMessage::response(404, detail::json_content_type(), error_body(ErrorCode::NotFound, request.path));
}

// --- server ------------------------------------------------------------------

TunnelServer::TunnelServer(ServerConfig config, RandomSource& rng, Clock clock, std::shared_ptr<InnerRouter> router)
    : config_(std::move(config)),
      rng_(rng),
      clock_(std::move(clock)),
      router_(std::move(router)),
      server_ephemeral_(crypto::generate_ephemeral_keypair(config_.server_ephemeral_secret)),
      store_(rng, config_.session) {
    if (server_ephemeral_.public_point != config_.signed_param.q_point) {
        throw TunnelError(ErrorCode::ConfigError, "server ephemeral secret does not match the signed Q");
    }
    if (config_.decoy_secret.empty()) config_.decoy_secret = rng_.draw(32);
}

HttpResponse TunnelServer::handle(const HttpRequest& request) {
    auto path = request.path();
    try {
        if (path == "/tunnel/key") {
            if (request.method == "GET") {
                return HttpResponse{200, detail::json_content_type(),
                                    to_bytes(server_param_to_json(handle_get_tunnel_key()))};
            }
            if (request.method == "POST") {
                auto j = detail::parse_json(request.body);
                auto v = to_fixed<crypto::kPointSize>(detail::base64_field(j, "v"));
                auto uid = handle_post_tunnel_key(v);
                return HttpResponse{200, detail::json_content_type(),
                                    detail::dump_json(Json{{"uid", base64_encode(uid)}})};
            }
            if (request.method == "PUT") {
                auto uid = uid_from_hex(request.header(kUidHeader).value_or(""));
                return handle_put_tunnel_key(uid, request.body);
            }
            return plain_error(ErrorCode::MethodNotAllowed);
        }
        if (path == "/tunnel/data") {
            if (request.method != "POST") return plain_error(ErrorCode::MethodNotAllowed);
            auto uid = uid_from_hex(request.header(kUidHeader).value_or(""));
            return handle_tunnel_data(uid, request.body, request.headers);
        }
        return handle_plaintext(request);
    } catch (const TunnelError& e) {
        return plain_error(e.code(), e.what());
    }
}

Uid TunnelServer::handle_post_tunnel_key(const crypto::Point& client_v) {
    auto z = crypto::ecdh_shared_secret(server_ephemeral_, client_v);
    auto key = crypto::derive_tunnel_key(z, config_.signed_param.signer_fingerprint);
    return store_.create_session(key, now());
}

NonceSeen TunnelServer::nonce_guard(const Uid& uid, std::int64_t now) {
    return [this, uid, now](const Nonce& n) {
        try {
            store_.check_and_record_nonce(uid, n, now);
            return false;
        } catch (const TunnelError&) {
            return true;
        }
    };
}

HttpResponse TunnelServer::sealed_response(const crypto::SessionKey& key, const Uid& uid, const InnerMessage& inner) {
    SealedEnvelope env;
    env.timestamp = now();
    env.nonce = rng_.draw<kNonceSize>();
    env.inner = inner;
    auto pkt = seal_envelope(key, uid, env, rng_);
    return HttpResponse{200,
                        {{"Content-Type", std::string(kPacketContentType)}, {std::string(kUidHeader), uid_to_hex(uid)}},
                        pkt.body()};
}

HttpResponse TunnelServer::handle_put_tunnel_key(const Uid& uid, ByteView packet_body) {
    const auto t = now();
    auto found = store_.lookup(uid, t);
    if (found.status == LookupStatus::Unknown) return plain_error(ErrorCode::UnknownSession);
    if (!found.session->encrypted) return plain_error(ErrorCode::SessionNotEncrypted);
    if (t > found.session->expires_at + store_.config().grace) return plain_error(ErrorCode::GraceExpired);

    auto pkt = TunnelPacket::from_body(uid, packet_body);
    ReplayWindow window = store_.config().window;
    window.not_before = found.session->not_before;
    auto nonce_check = nonce_guard(uid, t);

    std::optional<crypto::SessionKey> opened_with;
    SealedEnvelope env;
    for (const auto& key : store_.refresh_keys(uid, t)) {
        try {
            env = open_envelope(key, pkt, t, nonce_check, window);
            opened_with = key;
            break;
        } catch (const TunnelError& e) {
            if (e.code() == ErrorCode::AuthenticationFailure) continue;
            return sealed_response(key, uid, inner_error(e.code(), e.what()));
        }
    }
    if (!opened_with) return plain_error(ErrorCode::AuthenticationFailure);

    crypto::SessionKey new_key;
    try {
        auto req = InnerRequest::build(env.inner);
        if (req.method != "PUT" || req.path != "/tunnel/key") {
            throw TunnelError(ErrorCode::BadRequest, "refresh packet must carry PUT /tunnel/key");
        }
        auto v = to_fixed<crypto::kPointSize>(detail::base64_field(detail::parse_json(req.body), "v"));
        auto z = crypto::ecdh_shared_secret(server_ephemeral_, v);
        new_key = crypto::derive_tunnel_key(z, config_.signed_param.signer_fingerprint);
        store_.refresh_session(uid, new_key, t);
    } catch (const TunnelError& e) {
        return sealed_response(*opened_with, uid, inner_error(e.code(), e.what()));
    }
    return sealed_response(new_key, uid, json_response(200, Json{{"uid", base64_encode(uid)}}));
}

HttpResponse TunnelServer::handle_tunnel_data(const Uid& uid, ByteView packet_body, const HeaderList& outer_headers) {
    const auto t = now();
    auto found = store_.lookup(uid, t);
    if (found.status == LookupStatus::Unknown) return plain_error(ErrorCode::UnknownSession);
    const auto& session = *found.session;
    if (!session.encrypted) return plain_error(ErrorCode::SessionNotEncrypted);
    if (found.status == LookupStatus::Expired) return plain_error(ErrorCode::KeyExpired);

    ReplayWindow window = store_.config().window;
    window.not_before = session.not_before;
    SealedEnvelope env;
    try {
        auto pkt = TunnelPacket::from_body(uid, packet_body);
        env = open_envelope(session.key, pkt, t, nonce_guard(uid, t), window);
    } catch (const TunnelError& e) {
        if (e.code() == ErrorCode::AuthenticationFailure) return plain_error(e.code());
        // Decryption succeeded, so the error travels sealed.
        return sealed_response(session.key, uid, inner_error(e.code(), e.what()));
    }

    Dispatched out;
    try {
        InnerMessage sealed = env.inner;
        if (!env.cookies.empty()) {
            CookieJar jar;
            for (const auto& [n, v] : env.cookies) jar.add(n, v);
            sealed.headers.emplace_back("Cookie", jar.serialize());
        }
        auto req = InnerRequest::build(sealed, outer_headers_for_merge(outer_headers));
        req.uid = uid;
        req.encrypted = true;
        out = dispatch(req);
    } catch (const TunnelError& e) {
        out.response = inner_error(e.code(), e.what());
        out.srp_secret.reset();
    } catch (const std::exception& e) {
        out.response = inner_error(ErrorCode::Internal, e.what());
        out.srp_secret.reset();
    }

    // The proof travels under the key the client still holds; the SRP key applies afterwards.
    auto response = sealed_response(session.key, uid, out.response);
    if (out.srp_secret) store_.rekey_from_srp(uid, *out.srp_secret);
    return response;
}

HttpResponse TunnelServer::handle_plaintext(const HttpRequest& request) {
    const auto t = now();
    std::optional<Uid> uid;
    if (auto uid_hex = request.header(kUidHeader)) {
        uid = uid_from_hex(*uid_hex);
        auto found = store_.lookup(*uid, t);
        if (found.status == LookupStatus::Unknown) return plain_error(ErrorCode::UnknownSession);
        // An encrypted session can never be driven in clear.
        if (found.session->encrypted) return plain_error(ErrorCode::DowngradeRejected);
        if (found.status == LookupStatus::Expired) return plain_error(ErrorCode::KeyExpired);
    }
    if (config_.enforce_encryption) return plain_error(ErrorCode::EncryptionRequired);

    if (request.path() == "/session" && request.method == "POST") {
        auto plain = store_.create_plain_session(t);
        return HttpResponse{200, detail::json_content_type(), detail::dump_json(Json{{"uid", base64_encode(plain)}})};
    }

    InnerMessage msg = InnerMessage::request(request.method, request.target, request.headers, request.body);
    remove_headers(msg.headers, kUidHeader);
    Dispatched out;
    try {
        auto req = InnerRequest::build(msg);
        req.uid = uid;
        req.encrypted = false;
        out = dispatch(req);
    } catch (const TunnelError& e) {
        return plain_error(e.code(), e.what());
    }
    return HttpResponse{out.response.status(), out.response.headers, out.response.body};
}

TunnelServer::Dispatched TunnelServer::dispatch(const InnerRequest& request) {
    if (request.path == "/auth/info") return auth_info(request);
    if (request.path == "/auth") return auth(request);
    return Dispatched{router_->dispatch(request), std::nullopt};
}

TunnelServer::Dispatched TunnelServer::auth_info(const InnerRequest& request) {
    if (request.method != "POST") throw TunnelError(ErrorCode::MethodNotAllowed);
    if (!request.uid) throw TunnelError(ErrorCode::UnknownSession, "login requires a session");
    auto identity = detail::string_field(detail::parse_json(request.body), "username");

    UserRecord record;
    if (auto it = config_.users.find(identity); it != config_.users.end()) {
        record = it->second;
    } else {
        // Unknown identities get a stable salt and a verifier nobody knows the password for.
        auto id = to_bytes(identity);
        auto salt = crypto::hash({config_.decoy_secret, to_bytes(kDecoySaltLabel), id});
        record.salt.assign(salt.begin(), salt.begin() + srp::kSaltBytes);
        auto x = crypto::hash({config_.decoy_secret, to_bytes(kDecoyVerifierLabel), id});
        record.verifier = srp::standard_generator().mod_exp(BigNum::from_bytes(x), srp::standard_modulus());
    }
    auto params = srp::SrpParams::standard(record.salt);
    auto state = srp::server_challenge(params, record.verifier, rng_);
    Json body{{"challenge", base64_encode(state.own_public.to_bytes_padded(params.width()))},
              {"modulus", base64_encode(params.modulus.to_bytes())},
              {"generator", base64_encode(params.generator.to_bytes())},
              {"salt", base64_encode(params.salt)}};
    store_.park_srp(*request.uid, std::move(state));
    return Dispatched{json_response(200, body), std::nullopt};
}

TunnelServer::Dispatched TunnelServer::auth(const InnerRequest& request) {
    if (request.method != "POST") throw TunnelError(ErrorCode::MethodNotAllowed);
    if (!request.uid) throw TunnelError(ErrorCode::UnknownSession, "login requires a session");
    auto state = store_.take_srp(*request.uid);
    if (!state) throw TunnelError(ErrorCode::NoLoginInProgress);

    auto j = detail::parse_json(request.body);
    auto client_c = BigNum::from_bytes(detail::base64_field(j, "client_ephemeral"));
    auto proof_bytes = detail::base64_field(j, "client_proof");
    if (proof_bytes.size() != std::tuple_size_v<crypto::Digest>) throw TunnelError(ErrorCode::ProofMismatch);
    auto result = srp::server_verify(*state, client_c, to_fixed<32>(proof_bytes));

    auto access = hex_encode(rng_.draw(16));
    auto refresh = hex_encode(rng_.draw(16));
    store_.bind_tokens(*request.uid, access, refresh);
    auto uid_hex = uid_to_hex(*request.uid);
    auto headers = detail::json_content_type();
    headers.emplace_back("Set-Cookie", "AUTH-" + uid_hex + "=" + access + "; Path=/; Secure; HttpOnly");
    headers.emplace_back("Set-Cookie", "REFRESH-" + uid_hex + "=" + refresh + "; Path=/; Secure; HttpOnly");
    InnerMessage response = InnerMessage::response(
        200, std::move(headers), detail::dump_json(Json{{"server_proof", base64_encode(result.server_proof)}}));

    Dispatched out{std::move(response), std::nullopt};
    if (request.encrypted) out.srp_secret = result.secret_k;
    return out;
}

}  // namespace tunnel
