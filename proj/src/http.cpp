#include "tunnel/http.hpp"

#include <charconv>
#include <chrono>

#include <httplib.h>

#include "tunnel/errors.hpp"

namespace tunnel {

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

Clock system_clock() { return &unix_now; }

HttpResponse LoopbackTransport::round_trip(const HttpRequest& request) { return handler_(request); }

namespace {

// Headers cpp-httplib injects into server-side requests or manages itself.
bool is_connection_header(std::string_view name) {
    for (std::string_view h : {"Content-Length", "Transfer-Encoding", "Connection", "Keep-Alive", "REMOTE_ADDR",
                               "REMOTE_PORT", "LOCAL_ADDR", "LOCAL_PORT"}) {
        if (iequals(h, name)) return true;
    }
    return false;
}

// Multipart bodies must reach the tunnel byte for byte, but cpp-httplib parses
// them itself when it sees the real type; the listener parks it under this name.
constexpr const char* kParkedContentType = "X-Apptunnel-Parked-Content-Type";

std::string content_type_of(const HeaderList& headers) {
    return find_header(headers, "Content-Type").value_or("application/octet-stream");
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
    Endpoint ep;
    if (text.starts_with("http://")) text.remove_prefix(7);
    auto slash = text.find('/');
    ep.path = slash == std::string_view::npos ? "/" : std::string(text.substr(slash));
    auto authority = text.substr(0, slash);
    auto colon = authority.rfind(':');
    if (colon == std::string_view::npos) {
        ep.host = std::string(authority);
        ep.port = 80;
    } else {
        ep.host = std::string(authority.substr(0, colon));
        auto port = authority.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), ep.port);
        if (ec != std::errc{} || ptr != port.data() + port.size() || ep.port <= 0 || ep.port > 65535) {
            throw TunnelError(ErrorCode::ConfigError, "invalid port in '" + std::string(text) + "'");
        }
    }
    if (ep.host.empty()) throw TunnelError(ErrorCode::ConfigError, "missing host in '" + std::string(text) + "'");
    return ep;
}

struct HttpTransport::Impl {
    httplib::Client client;
    std::mutex mutex;
    Impl(const std::string& host, int port) : client(host, port) {
        client.set_keep_alive(true);
        client.set_url_encode(false);
        client.set_read_timeout(30, 0);
    }
};

HttpTransport::HttpTransport(std::string host, int port) : impl_(std::make_unique<Impl>(host, port)) {}
HttpTransport::~HttpTransport() = default;

HttpResponse HttpTransport::round_trip(const HttpRequest& request) {
    httplib::Headers headers;
    for (const auto& [n, v] : request.headers) {
        if (!is_connection_header(n) && !iequals(n, "Content-Type")) headers.emplace(n, v);
    }
    httplib::Request req;
    req.method = request.method;
    req.path = request.target;
    req.headers = std::move(headers);
    req.body.assign(request.body.begin(), request.body.end());
    if (!request.body.empty() || request.method == "POST" || request.method == "PUT") {
        req.set_header("Content-Type", content_type_of(request.headers));
    }

    httplib::Result res = [&] {
        std::lock_guard lock(impl_->mutex);
        return impl_->client.send(req);
    }();
    if (!res) {
        throw TunnelError(ErrorCode::TransportError, httplib::to_string(res.error()));
    }
    HttpResponse out;
    out.status = res->status;
    for (const auto& [n, v] : res->headers) {
        if (!is_connection_header(n)) out.headers.emplace_back(n, v);
    }
    out.body.assign(res->body.begin(), res->body.end());
    return out;
}

struct HttpListener::Impl {
    httplib::Server server;
};

HttpListener::HttpListener(HttpHandler handler) : impl_(std::make_unique<Impl>()) {
    auto dispatch = [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
        HttpRequest in;
        in.method = req.method;
        in.target = req.target.empty() ? req.path : req.target;
        for (const auto& [n, v] : req.headers) {
            if (iequals(n, kParkedContentType)) {
                in.headers.emplace_back("Content-Type", v);
            } else if (!is_connection_header(n)) {
                in.headers.emplace_back(n, v);
            }
        }
        in.body.assign(req.body.begin(), req.body.end());
        in.peer = req.remote_addr + ":" + std::to_string(req.remote_port);
        HttpResponse out;
        try {
            out = handler(in);
        } catch (const std::exception& e) {
            out.status = 500;
            out.headers = {{"Content-Type", "text/plain"}};
            out.body = to_bytes(e.what());
        }
        res.status = out.status;
        for (const auto& [n, v] : out.headers) {
            if (!is_connection_header(n) && !iequals(n, "Content-Type")) res.set_header(n, v);
        }
        res.set_content(std::string(out.body.begin(), out.body.end()), content_type_of(out.headers));
    };
    // Idle keep-alive connections hold stop() for this long.
    impl_->server.set_keep_alive_timeout(1);
    impl_->server.set_pre_routing_handler([](const httplib::Request& req, httplib::Response&) {
        // The request object is owned by the server and mutable; the hook just sees it as const.
        auto& mutable_req = const_cast<httplib::Request&>(req);
        if (mutable_req.is_multipart_form_data()) {
            auto it = mutable_req.headers.find("Content-Type");
            mutable_req.headers.emplace(kParkedContentType, it->second);
            mutable_req.headers.erase(it);
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });
    impl_->server.Get(".*", dispatch);
    impl_->server.Post(".*", dispatch);
    impl_->server.Put(".*", dispatch);
    impl_->server.Delete(".*", dispatch);
    impl_->server.Patch(".*", dispatch);
}

HttpListener::~HttpListener() { stop(); }

int HttpListener::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
    } else {
        port_ = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (port_ <= 0) throw TunnelError(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
    return port_;
}

void HttpListener::run() { impl_->server.listen_after_bind(); }

void HttpListener::start() {
    thread_ = std::thread([this] { run(); });
    impl_->server.wait_until_ready();
}

void HttpListener::stop() {
    // cpp-httplib only closes the listening socket of a running server.
    if (port_ > 0 && !thread_.joinable() && !impl_->server.is_running()) start();
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
    port_ = 0;
}

}  // namespace tunnel
