#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tunnel/keyfile.hpp"
#include "tunnel/proxy.hpp"

namespace py = pybind11;
using namespace tunnel;

namespace {

Bytes to_cpp(const py::bytes& b) {
    std::string_view v = b;
    return Bytes(v.begin(), v.end());
}

py::bytes to_py(ByteView b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

template <std::size_t N>
FixedBytes<N> fixed(const py::bytes& b, const char* what) {
    auto v = to_cpp(b);
    if (v.size() != N) throw py::value_error(std::string(what) + " must be " + std::to_string(N) + " bytes");
    return to_fixed<N>(v);
}

crypto::Fingerprint pin_from(const py::object& pin) {
    if (py::isinstance<py::bytes>(pin)) return fixed<32>(pin.cast<py::bytes>(), "pin");
    return keyfile::parse_fingerprint(pin.cast<std::string>());
}

using PyHeaders = std::vector<std::pair<std::string, std::string>>;

struct Response {
    int status;
    PyHeaders headers;
    py::bytes body;
};

Response to_response(const InnerMessage& m) { return {m.status(), m.headers, to_py(m.body)}; }

/// Server plus its entropy; optionally listening on a background thread.
class PyServer {
public:
    PyServer(const std::string& keys_dir, const std::map<std::string, std::string>& users, bool enforce_encryption) {
        auto bundle = keyfile::read_bundle(keys_dir);
        ServerConfig cfg;
        cfg.signed_param = bundle.param;
        cfg.server_ephemeral_secret = bundle.ephemeral_secret;
        cfg.decoy_secret = bundle.decoy_secret;
        cfg.enforce_encryption = enforce_encryption;
        for (const auto& [name, pw] : users) cfg.users[name] = make_user_record(name, pw, system_random());
        server_ = std::make_unique<TunnelServer>(std::move(cfg), system_random(), system_clock());
    }

    std::tuple<int, PyHeaders, py::bytes> handle(const std::string& method, const std::string& target,
                                                 const PyHeaders& headers, const py::bytes& body) {
        HttpRequest req{method, target, headers, to_cpp(body), "python"};
        HttpResponse resp;
        {
            py::gil_scoped_release release;
            resp = server_->handle(req);
        }
        return {resp.status, resp.headers, to_py(resp.body)};
    }

    int listen(const std::string& host, int port) {
        if (listener_) throw py::value_error("already listening");
        listener_ = std::make_unique<HttpListener>(server_->handler());
        int bound = listener_->bind(host, port);
        listener_->start();
        return bound;
    }

    void stop() {
        if (!listener_) return;
        py::gil_scoped_release release;
        listener_->stop();
        listener_.reset();
    }

    py::bytes fingerprint() const { return to_py(server_->config().signed_param.signer_fingerprint); }
    std::size_t session_count() const { return server_->sessions().size(); }
    TunnelServer& inner() { return *server_; }

    ~PyServer() {
        if (listener_) listener_->stop();
    }

private:
    std::unique_ptr<TunnelServer> server_;
    std::unique_ptr<HttpListener> listener_;
};

class PyClient {
public:
    PyClient(std::shared_ptr<Transport> transport, const py::object& pin)
        : client_(std::move(transport), pin_from(pin), system_random()) {}

    void handshake() {
        py::gil_scoped_release release;
        client_.handshake();
    }

    Response request(const std::string& method, const std::string& target, const py::bytes& body,
                     const PyHeaders& headers) {
        auto msg = InnerMessage::request(method, target, headers, to_cpp(body));
        InnerMessage out;
        {
            py::gil_scoped_release release;
            out = client_.send(msg);
        }
        return to_response(out);
    }

    Response login(const std::string& user, const std::string& password) {
        InnerMessage out;
        {
            py::gil_scoped_release release;
            out = client_.login(user, password);
        }
        return to_response(out);
    }

    void refresh() {
        py::gil_scoped_release release;
        client_.refresh();
    }

    std::string session_data() const { return client_.session_data().to_json(); }
    void resume(const std::string& json) { client_.resume(ClientSessionData::from_json(json)); }
    std::string uid() const { return uid_to_hex(client_.uid()); }
    py::bytes key() const { return to_py(client_.key().view()); }
    std::string state() const { return std::string(to_string(client_.state())); }

private:
    TunnelClient client_;
};

std::shared_ptr<Transport> http_transport(const std::string& url) {
    auto ep = Endpoint::parse(url);
    return std::make_shared<HttpTransport>(ep.host, ep.port);
}

}  // namespace

PYBIND11_MODULE(_apptunnel, m) {
    m.doc() = "Application-layer encrypted tunnel over HTTP";

    static PyObject* tunnel_error =
        PyErr_NewExceptionWithDoc("apptunnel.TunnelError", "Protocol error; .code and .name identify it.",
                                  PyExc_RuntimeError, nullptr);
    m.add_object("TunnelError", py::handle(tunnel_error));
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const TunnelError& e) {
            py::object inst = py::reinterpret_steal<py::object>(
                PyObject_CallFunction(tunnel_error, "s", e.what()));
            inst.attr("code") = static_cast<int>(e.code());
            inst.attr("name") = std::string(error_name(e.code()));
            PyErr_SetObject(tunnel_error, inst.ptr());
        }
    });

    m.def("error_name", [](int code) -> py::object {
        auto c = error_code_from_int(code);
        if (!c) return py::none();
        return py::str(std::string(error_name(*c)));
    });
    m.def("exit_code", [](int code) {
        auto c = error_code_from_int(code);
        if (!c) throw py::value_error("unknown error code");
        return exit_code(*c);
    });

    m.def("sha256", [](const py::bytes& data) { return to_py(crypto::hash(to_cpp(data))); });
    m.def("x25519_public", [](const py::bytes& secret) {
        return to_py(crypto::generate_ephemeral_keypair(fixed<32>(secret, "secret")).public_point);
    });
    m.def("x25519", [](const py::bytes& secret, const py::bytes& peer) {
        auto own = crypto::generate_ephemeral_keypair(fixed<32>(secret, "secret"));
        return to_py(crypto::ecdh_shared_secret(own, fixed<32>(peer, "peer")).z);
    });
    m.def("seal", [](const py::bytes& key, const py::bytes& iv, const py::bytes& plaintext) {
        auto s = crypto::seal(crypto::SessionKey(fixed<16>(key, "key")), fixed<16>(iv, "iv"), to_cpp(plaintext));
        return py::make_tuple(to_py(s.ciphertext), to_py(s.tag));
    }, "AES-128-GCM with a 16-byte IV; returns (ciphertext, 12-byte tag).");
    m.def("open", [](const py::bytes& key, const py::bytes& iv, const py::bytes& ciphertext, const py::bytes& tag) {
        return to_py(crypto::open(crypto::SessionKey(fixed<16>(key, "key")), fixed<16>(iv, "iv"), to_cpp(ciphertext),
                                  fixed<12>(tag, "tag")));
    });
    m.def("srp_verifier", [](const py::bytes& salt, const std::string& identity, const std::string& password) {
        return to_py(srp::make_verifier(srp::SrpParams::standard(to_cpp(salt)), identity, password).to_bytes());
    });
    m.def("keygen", [](const std::string& out_dir) {
        auto bundle = keyfile::generate(system_random());
        keyfile::write_bundle(out_dir, bundle);
        return keyfile::fingerprint_hex(bundle.fingerprint());
    }, py::arg("out_dir"), "Writes a new key bundle into out_dir and returns the hex fingerprint.");

    py::class_<Response>(m, "Response")
        .def_readonly("status", &Response::status)
        .def_readonly("headers", &Response::headers)
        .def_readonly("body", &Response::body)
        .def("header", [](const Response& r, const std::string& name) -> py::object {
            auto v = find_header(r.headers, name);
            if (!v) return py::none();
            return py::str(*v);
        })
        .def("__repr__", [](const Response& r) { return "<Response " + std::to_string(r.status) + ">"; });

    py::class_<PyServer>(m, "Server")
        .def(py::init<const std::string&, const std::map<std::string, std::string>&, bool>(), py::arg("keys_dir"),
             py::arg("users") = std::map<std::string, std::string>{}, py::arg("enforce_encryption") = true)
        .def("handle", &PyServer::handle, py::arg("method"), py::arg("target"), py::arg("headers") = PyHeaders{},
             py::arg("body") = py::bytes())
        .def("listen", &PyServer::listen, py::arg("host") = "127.0.0.1", py::arg("port") = 0)
        .def("stop", &PyServer::stop)
        .def_property_readonly("fingerprint", &PyServer::fingerprint)
        .def_property_readonly("session_count", &PyServer::session_count);

    py::class_<PyClient>(m, "Client")
        .def(py::init([](const std::string& url, const py::object& pin) {
                 return std::make_unique<PyClient>(http_transport(url), pin);
             }),
             py::arg("url"), py::arg("pin"))
        .def(py::init([](PyServer& server, const py::object& pin) {
                 return std::make_unique<PyClient>(std::make_shared<LoopbackTransport>(server.inner().handler()), pin);
             }),
             py::arg("server"), py::arg("pin"), py::keep_alive<1, 2>())
        .def("handshake", &PyClient::handshake)
        .def("request", &PyClient::request, py::arg("method"), py::arg("target"), py::arg("body") = py::bytes(),
             py::arg("headers") = PyHeaders{})
        .def("login", &PyClient::login, py::arg("user"), py::arg("password"))
        .def("refresh", &PyClient::refresh)
        .def("session_data", &PyClient::session_data)
        .def("resume", &PyClient::resume)
        .def_property_readonly("uid", &PyClient::uid)
        .def_property_readonly("key", &PyClient::key)
        .def_property_readonly("state", &PyClient::state);
}
