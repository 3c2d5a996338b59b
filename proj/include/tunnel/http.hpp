#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "tunnel/message.hpp"

namespace tunnel {

/// Outer (cleartext) HTTP request as seen by the tunnel endpoints.
struct HttpRequest {
    std::string method;
    std::string target;  // path plus optional query
    HeaderList headers;
    Bytes body;
    std::string peer;  // identifies the downstream connection, e.g. "127.0.0.1:51234"

    std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
    std::string path() const { return target.substr(0, target.find('?')); }
};

struct HttpResponse {
    int status = 200;
    HeaderList headers;
    Bytes body;

    std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
};

using HttpHandler = std::function<HttpResponse(const HttpRequest&)>;
using Clock = std::function<std::int64_t()>;

/// Whole seconds since the Unix epoch.
std::int64_t unix_now();
Clock system_clock();

/// Client side of one HTTP exchange.
class Transport {
public:
    virtual ~Transport() = default;
    /// Throws TransportError when no response could be obtained.
    virtual HttpResponse round_trip(const HttpRequest& request) = 0;
};

/// Calls a handler in-process; used for tests and embedding.
class LoopbackTransport final : public Transport {
public:
    explicit LoopbackTransport(HttpHandler handler) : handler_(std::move(handler)) {}
    HttpResponse round_trip(const HttpRequest& request) override;

private:
    HttpHandler handler_;
};

/// Plain HTTP/1.1 client (cpp-httplib).
class HttpTransport final : public Transport {
public:
    HttpTransport(std::string host, int port);
    ~HttpTransport() override;
    HttpResponse round_trip(const HttpRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Parses "host:port" or "http://host:port[/...]".
struct Endpoint {
    std::string host;
    int port = 0;
    std::string path;  // remainder after the authority, "/" if absent

    static Endpoint parse(std::string_view text);
};

/// HTTP server forwarding every request to one handler (cpp-httplib).
class HttpListener {
public:
    explicit HttpListener(HttpHandler handler);
    ~HttpListener();
    HttpListener(const HttpListener&) = delete;
    HttpListener& operator=(const HttpListener&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run();
    /// Serves on a background thread.
    void start();
    void stop();
    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace tunnel
