#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "tunnel/proxy.hpp"

using namespace tunnel;
using namespace fixtures;

TEST_CASE("Endpoint::parse") {
    auto a = Endpoint::parse("127.0.0.1:8080");
    CHECK(a.host == "127.0.0.1");
    CHECK(a.port == 8080);
    CHECK(a.path == "/");
    auto b = Endpoint::parse("http://example.org:9000/base/x");
    CHECK(b.host == "example.org");
    CHECK(b.port == 9000);
    CHECK(b.path == "/base/x");
    CHECK(Endpoint::parse("localhost").port == 80);
    for (const char* bad : {"host:", "host:0", "host:70000", "host:12ab", ":80"}) {
        INFO(bad);
        CHECK_THROWS_AS(Endpoint::parse(bad), TunnelError);
    }
}

TEST_CASE("listener and transport carry binary bodies and headers") {
    HttpRequest seen;
    HttpListener listener([&](const HttpRequest& r) {
        seen = r;
        if (r.path() == "/boom") throw std::runtime_error("handler blew up");
        return HttpResponse{201, {{"Content-Type", "application/octet-stream"}, {"X-Echo", "yes"}}, r.body};
    });
    auto port = listener.bind("127.0.0.1", 0);
    listener.start();

    HttpTransport t("127.0.0.1", port);
    Bytes body(65536);
    for (std::size_t i = 0; i < body.size(); ++i) body[i] = static_cast<std::uint8_t>(i * 31 + 7);
    auto r = t.round_trip(HttpRequest{"POST", "/x?q=1", {{"X-Tunnel-UID", "ab"}, {"Content-Type", "application/octet-stream"}}, body, {}});
    CHECK(r.status == 201);
    CHECK(r.body == body);
    CHECK(r.header("X-Echo") == "yes");
    CHECK(seen.target == "/x?q=1");
    CHECK(seen.header("X-Tunnel-UID") == "ab");
    CHECK(seen.peer.starts_with("127.0.0.1:"));

    auto boom = t.round_trip(HttpRequest{"GET", "/boom", {}, {}, {}});
    CHECK(boom.status == 500);
    listener.stop();
}

TEST_CASE("targets and multipart bodies pass through untouched") {
    HttpRequest seen;
    HttpListener listener([&](const HttpRequest& r) {
        seen = r;
        return HttpResponse{200, {{"Content-Type", "text/plain"}}, {}};
    });
    auto port = listener.bind("127.0.0.1", 0);
    listener.start();
    HttpTransport t("127.0.0.1", port);

    t.round_trip(HttpRequest{"GET", "/q?plus=one+two&pct=a%2Bb&u=J%C3%BC", {}, {}, {}});
    CHECK(seen.target == "/q?plus=one+two&pct=a%2Bb&u=J%C3%BC");

    std::string ct = "multipart/form-data; boundary=XyZ";
    auto body = to_bytes("--XyZ\r\nContent-Disposition: form-data; name=\"f\"; filename=\"a.bin\"\r\n\r\n\x01\x02\r\n--XyZ--\r\n");
    t.round_trip(HttpRequest{"POST", "/upload", {{"Content-Type", ct}}, body, {}});
    CHECK(seen.body == body);
    CHECK(seen.header("Content-Type") == ct);
    CHECK_FALSE(seen.header("X-Apptunnel-Parked-Content-Type"));
    listener.stop();
}

TEST_CASE("transport failure surfaces as TransportError") {
    int port;
    {
        HttpListener probe([](const HttpRequest&) { return HttpResponse{}; });
        port = probe.bind("127.0.0.1", 0);
    }
    HttpTransport t("127.0.0.1", port);
    try {
        t.round_trip(HttpRequest{"GET", "/", {}, {}, {}});
        FAIL("nothing is listening");
    } catch (const TunnelError& e) {
        CHECK(e.code() == ErrorCode::TransportError);
    }
}

TEST_CASE("tunnel client and proxy over real sockets") {
    SeededRandom rng(99);
    auto keys = make_server_keys(rng);
    TunnelServer server(make_config(keys, rng, {{"alice", "correct horse"}}), rng, system_clock());
    HttpListener server_http(server.handler());
    auto server_port = server_http.bind("127.0.0.1", 0);
    server_http.start();

    auto upstream = std::make_shared<HttpTransport>("127.0.0.1", server_port);
    TunnelClient client(upstream, keys.fingerprint, rng);
    client.handshake();
    auto direct = client.send(InnerMessage::request("POST", "/api/echo", {{"Content-Type", "text/plain"}}, to_bytes("over tcp")));
    CHECK(to_string(direct.body) == "over tcp");
    client.login("alice", "correct horse");
    CHECK(to_string(client.send(InnerMessage::request("POST", "/api/echo", {{"Content-Type", "text/plain"}}, to_bytes("after login"))).body) == "after login");

    ProxyConfig cfg;
    cfg.pinned_fingerprint = keys.fingerprint;
    cfg.user_password = "correct horse";
    std::vector<std::string> log;
    std::mutex log_mutex;
    TunnelProxy proxy(cfg, std::make_shared<HttpTransport>("127.0.0.1", server_port), rng, system_clock(),
                      [&](const std::string& l) {
                          std::lock_guard lock(log_mutex);
                          log.push_back(l);
                      });
    proxy.start();
    HttpListener proxy_http(proxy.handler());
    auto proxy_port = proxy_http.bind("127.0.0.1", 0);
    proxy_http.start();

    HttpTransport plain("127.0.0.1", proxy_port);
    auto r = plain.round_trip(HttpRequest{"POST", "/api/echo", {{"Content-Type", "text/plain"}}, to_bytes("via proxy"), {}});
    CHECK(r.status == 200);
    CHECK(to_string(r.body) == "via proxy");

    // Plaintext straight at the server is refused.
    auto refused = upstream->round_trip(HttpRequest{"GET", "/api/echo", {}, {}, {}});
    CHECK(plain_code(refused) == static_cast<int>(ErrorCode::EncryptionRequired));

    proxy_http.stop();
    server_http.stop();
}
