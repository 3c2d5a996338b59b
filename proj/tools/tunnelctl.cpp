// tunnelctl: key ceremony, demo server, scripted client and MITM proxy.
//
// Exit codes: 0 on success, the per-error code from exit_code() for tunnel
// errors, CLI11's own codes (>= 100) for usage errors, 1 for anything else.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tunnel/keyfile.hpp"
#include "tunnel/proxy.hpp"

using namespace tunnel;
namespace fs = std::filesystem;

namespace {

void log_json(const nlohmann::json& j) {
    std::cerr << j.dump() << std::endl;
}

/// Blocks SIGINT and SIGTERM for this thread and every thread started after it.
sigset_t block_stop_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

int wait_for(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
}

std::string read_password_file(const std::string& path) {
    auto text = keyfile::read_text(path);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

// --- keygen ------------------------------------------------------------------

int cmd_keygen(const std::string& out) {
    auto bundle = keyfile::generate(system_random());
    keyfile::write_bundle(out, bundle);
    std::cout << keyfile::fingerprint_hex(bundle.fingerprint()) << "\n";
    std::cerr << "wrote " << out << "/{" << keyfile::kSigningKeyFile << ", " << keyfile::kEphemeralFile << ", "
              << keyfile::kDecoyFile << ", " << keyfile::kParamFile << "}\n"
              << "keep " << keyfile::kSigningKeyFile << " offline; the server needs only the other three\n";
    return 0;
}

// --- adduser -----------------------------------------------------------------

int cmd_adduser(const std::string& users_file, const std::string& name, std::string password, bool from_stdin) {
    if (from_stdin) std::getline(std::cin, password);
    if (password.empty()) throw TunnelError(ErrorCode::ConfigError, "empty password");
    if (name.empty() || name.find(':') != std::string::npos) {
        throw TunnelError(ErrorCode::ConfigError, "user name must be non-empty and contain no ':'");
    }
    auto users = keyfile::load_users(users_file);
    users[name] = make_user_record(name, password, system_random());
    keyfile::save_users(users_file, users);
    std::cerr << "stored verifier for " << name << " in " << users_file << "\n";
    return 0;
}

// --- serve -------------------------------------------------------------------

int cmd_serve(const std::string& config, const std::string& listen_override, std::optional<bool> enforce) {
    auto settings = keyfile::load_serve_settings(config);
    if (!listen_override.empty()) settings.listen = listen_override;
    if (enforce) settings.server.enforce_encryption = *enforce;
    auto listen = Endpoint::parse(settings.listen);
    auto fingerprint = settings.server.signed_param.signer_fingerprint;
    auto users = settings.server.users.size();
    auto enforcing = settings.server.enforce_encryption;

    TunnelServer server(std::move(settings.server), system_random(), system_clock());
    auto signals = block_stop_signals();
    HttpListener listener(server.handler());
    int port = listener.bind(listen.host, listen.port);
    listener.start();
    log_json({{"event", "listening"},
              {"address", listen.host + ":" + std::to_string(port)},
              {"fingerprint", keyfile::fingerprint_hex(fingerprint)},
              {"enforce_encryption", enforcing},
              {"users", users}});
    int sig = wait_for(signals);
    listener.stop();
    log_json({{"event", "stopped"}, {"signal", sig}});
    return 0;
}

// --- request -----------------------------------------------------------------

struct RequestArgs {
    std::string url;
    std::string method = "GET";
    std::string data;
    std::string data_file;
    std::vector<std::string> headers;
    std::string pin;
    std::string session_file;
    std::string login;
    bool include = false;
};

HeaderList parse_headers(const std::vector<std::string>& raw) {
    HeaderList out;
    for (const auto& h : raw) {
        auto colon = h.find(':');
        if (colon == std::string::npos || colon == 0) {
            throw TunnelError(ErrorCode::ConfigError, "header must look like 'Name: value': " + h);
        }
        auto value = h.substr(colon + 1);
        value.erase(0, value.find_first_not_of(' '));
        out.emplace_back(h.substr(0, colon), value);
    }
    return out;
}

int cmd_request(const RequestArgs& a) {
    auto ep = Endpoint::parse(a.url);
    auto pin = keyfile::parse_fingerprint(a.pin);
    auto transport = std::make_shared<HttpTransport>(ep.host, ep.port);

    Bytes body = a.data_file.empty() ? to_bytes(a.data) : to_bytes(keyfile::read_text(a.data_file));
    auto headers = parse_headers(a.headers);
    if (!body.empty() && !find_header(headers, "Content-Type")) headers.emplace_back("Content-Type", "text/plain");
    auto request = InnerMessage::request(a.method, ep.path, headers, body);

    std::optional<std::pair<std::string, std::string>> credentials;
    if (!a.login.empty()) {
        auto colon = a.login.find(':');
        if (colon == std::string::npos) throw TunnelError(ErrorCode::ConfigError, "--login expects user:password");
        credentials.emplace(a.login.substr(0, colon), a.login.substr(colon + 1));
    }

    auto run = [&](bool resume) {
        auto client = std::make_unique<TunnelClient>(transport, pin, system_random());
        if (resume) {
            client->resume(ClientSessionData::from_json(keyfile::read_text(a.session_file)));
        } else {
            client->handshake();
        }
        if (credentials) client->login(credentials->first, credentials->second);
        auto response = client->send(request);
        if (!a.session_file.empty()) keyfile::write_private(a.session_file, client->session_data().to_json());
        return response;
    };

    bool can_resume = !a.session_file.empty() && fs::exists(a.session_file);
    InnerMessage response;
    try {
        response = run(can_resume);
    } catch (const TunnelError& e) {
        // A stored session the server no longer knows is replaced by a fresh handshake.
        auto c = e.code();
        bool stale_session = c == ErrorCode::UnknownSession || c == ErrorCode::RefreshFailed ||
                             c == ErrorCode::SessionClosed || c == ErrorCode::KeyExpired;
        if (!can_resume || !stale_session) throw;
        response = run(false);
    }

    std::ostream& meta = a.include ? std::cout : std::cerr;
    meta << response.start_line << "\r\n";
    if (a.include) {
        for (const auto& [n, v] : response.headers) std::cout << n << ": " << v << "\r\n";
        std::cout << "\r\n";
    }
    std::cout.write(reinterpret_cast<const char*>(response.body.data()),
                    static_cast<std::streamsize>(response.body.size()));
    std::cout.flush();
    return 0;
}

// --- proxy -------------------------------------------------------------------

int cmd_proxy(ProxyConfig cfg, const std::string& pin, const std::string& password_file) {
    cfg.pinned_fingerprint = keyfile::parse_fingerprint(pin);
    if (!password_file.empty()) cfg.user_password = read_password_file(password_file);
    auto upstream = Endpoint::parse(cfg.upstream_address);
    auto listen = Endpoint::parse(cfg.listen_address);

    TunnelProxy proxy(cfg, std::make_shared<HttpTransport>(upstream.host, upstream.port), system_random());
    proxy.start();
    auto signals = block_stop_signals();
    HttpListener listener(proxy.handler());
    int port = listener.bind(listen.host, listen.port);
    listener.start();
    log_json({{"event", "listening"},
              {"address", listen.host + ":" + std::to_string(port)},
              {"upstream", upstream.host + ":" + std::to_string(upstream.port)},
              {"uid", uid_to_hex(proxy.upstream().uid())},
              {"mitm", cfg.user_password.has_value()},
              {"log_plaintext", cfg.log_plaintext}});
    wait_for(signals);
    listener.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Application-layer encrypted tunnel over HTTP"};
    app.require_subcommand(1);

    std::string keygen_out;
    auto* keygen = app.add_subcommand("keygen", "Generate a signing key, server ephemeral and signed Q (run offline)");
    keygen->add_option("--out", keygen_out, "Directory to create; refuses to overwrite")->required();

    std::string users_file, user_name, user_password;
    bool password_stdin = false;
    auto* adduser = app.add_subcommand("adduser", "Store an SRP verifier for a user");
    adduser->add_option("--users", users_file, "Users file (created if missing)")->required();
    adduser->add_option("--name", user_name, "User name")->required();
    auto* pw_opt = adduser->add_option("--password", user_password, "Password");
    adduser->add_flag("--password-stdin", password_stdin, "Read the password from the first line of stdin")
        ->excludes(pw_opt);

    std::string serve_config, serve_listen;
    bool serve_enforce = true;
    auto* serve = app.add_subcommand("serve", "Run the tunnel server with the demo API");
    serve->add_option("--config", serve_config, "Server config file")->required()->check(CLI::ExistingFile);
    serve->add_option("--listen", serve_listen, "host:port, overrides the config");
    auto* enforce_opt = serve->add_option("--enforce-encryption", serve_enforce,
                                          "false enables migration mode (plaintext routes allowed)");

    RequestArgs req;
    auto* request = app.add_subcommand("request", "Send one sealed request and print the inner response");
    request->add_option("url", req.url, "http://host:port/path?query")->required();
    request->add_option("-X,--method", req.method, "Inner method");
    auto* data_opt = request->add_option("-d,--data", req.data, "Inner body");
    request->add_option("--data-file", req.data_file, "Read the inner body from a file")
        ->excludes(data_opt)
        ->check(CLI::ExistingFile);
    request->add_option("-H,--header", req.headers, "Inner header, 'Name: value'");
    request->add_option("--pin", req.pin, "Server fingerprint (hex)")->required();
    request->add_option("--session-file", req.session_file, "Resume from and save the session here");
    request->add_option("--login", req.login, "user:password; log in over SRP before the request");
    request->add_flag("-i,--include", req.include, "Print the status line and headers on stdout");

    ProxyConfig proxy_cfg;
    std::string proxy_pin, proxy_password, proxy_password_file;
    auto* proxy = app.add_subcommand("proxy", "Plaintext-to-tunnel proxy with optional SRP interception");
    proxy->add_option("--listen", proxy_cfg.listen_address, "host:port")->capture_default_str();
    proxy->add_option("--upstream", proxy_cfg.upstream_address, "Tunnel server, host:port")->required();
    proxy->add_option("--pin", proxy_pin, "Server fingerprint (hex)")->required();
    auto* proxy_pw = proxy->add_option("--password", proxy_password, "User password; enables the SRP MITM");
    proxy->add_option("--password-file", proxy_password_file, "Read the password from a file")
        ->excludes(proxy_pw)
        ->check(CLI::ExistingFile);
    proxy->add_flag("--log-plaintext", proxy_cfg.log_plaintext, "Log bodies and session keys");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*keygen) return cmd_keygen(keygen_out);
        if (*adduser) return cmd_adduser(users_file, user_name, user_password, password_stdin);
        if (*serve) {
            return cmd_serve(serve_config, serve_listen,
                             enforce_opt->count() ? std::optional<bool>(serve_enforce) : std::nullopt);
        }
        if (*request) return cmd_request(req);
        if (*proxy) {
            if (proxy_pw->count()) proxy_cfg.user_password = proxy_password;
            return cmd_proxy(proxy_cfg, proxy_pin, proxy_password_file);
        }
    } catch (const TunnelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
