#include "tunnel/keyfile.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "tunnel/wire.hpp"

namespace tunnel::keyfile {

using detail::Json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw TunnelError(ErrorCode::ConfigError, what); }

Json parse_file(const fs::path& file) {
    auto j = Json::parse(read_text(file), nullptr, false);
    if (j.is_discarded() || !j.is_object()) config_error(file.string() + ": not a JSON object");
    return j;
}

Bytes b64_member(const Json& j, const char* name, const fs::path& file) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) config_error(file.string() + ": missing '" + name + "'");
    try {
        return base64_decode(it->get<std::string>());
    } catch (const TunnelError&) {
        config_error(file.string() + ": '" + name + "' is not base64");
    }
}

void write_new(const fs::path& file, std::string_view content, mode_t mode) {
    int fd = ::open(file.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, mode);
    if (fd < 0) config_error("cannot create " + file.string() + ": " + std::strerror(errno));
    auto ok = ::write(fd, content.data(), content.size()) == static_cast<ssize_t>(content.size());
    ok = ::fchmod(fd, mode) == 0 && ok;
    ok = ::close(fd) == 0 && ok;
    if (!ok) config_error("cannot write " + file.string());
}

std::string secret_json(ByteView secret) { return Json{{"secret", base64_encode(secret)}}.dump(2) + "\n"; }

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::int64_t int_member(const Json& j, const char* name, std::int64_t fallback) {
    auto it = j.find(name);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        config_error(std::string("session.") + name + " must be a non-negative integer");
    }
    return it->get<std::int64_t>();
}

}  // namespace

std::string read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) config_error("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_private(const fs::path& file, std::string_view content) {
    auto tmp = file;
    tmp += ".tmp";
    fs::remove(tmp);
    write_new(tmp, content, 0600);
    fs::rename(tmp, file);
}

KeyBundle generate(RandomSource& rng) {
    KeyBundle b;
    b.signing = crypto::default_signature_scheme().generate(rng);
    b.ephemeral_secret = rng.draw<crypto::kPointSize>();
    auto eph = crypto::generate_ephemeral_keypair(b.ephemeral_secret);
    b.param = crypto::sign_server_param(b.signing, eph.public_point);
    b.decoy_secret = rng.draw(32);
    return b;
}

void write_bundle(const fs::path& dir, const KeyBundle& bundle) {
    std::error_code ec;
    if (fs::exists(dir, ec) || ec) throw TunnelError(ErrorCode::PathExists, dir.string());
    if (!fs::create_directories(dir, ec) || ec) config_error("cannot create " + dir.string() + ": " + ec.message());
    fs::permissions(dir, fs::perms::owner_all, ec);

    Json signing{{"scheme", std::string(crypto::default_signature_scheme().name())},
                 {"private_key", base64_encode(bundle.signing.private_key)},
                 {"public_key", base64_encode(bundle.signing.public_key)},
                 {"fingerprint", fingerprint_hex(bundle.fingerprint())}};
    write_new(dir / kSigningKeyFile, signing.dump(2) + "\n", 0600);
    write_new(dir / kEphemeralFile, secret_json(bundle.ephemeral_secret), 0600);
    write_new(dir / kDecoyFile, secret_json(bundle.decoy_secret), 0600);
    write_new(dir / kParamFile, server_param_to_json(bundle.param) + "\n", 0644);
}

KeyBundle read_bundle(const fs::path& dir) {
    KeyBundle b;
    b.param = read_server_param(dir / kParamFile);
    b.ephemeral_secret = to_fixed<crypto::kPointSize>(read_secret(dir / kEphemeralFile));
    if (fs::exists(dir / kDecoyFile)) b.decoy_secret = read_secret(dir / kDecoyFile);
    if (fs::exists(dir / kSigningKeyFile)) {
        auto file = dir / kSigningKeyFile;
        auto j = parse_file(file);
        b.signing.private_key = b64_member(j, "private_key", file);
        b.signing.public_key = b64_member(j, "public_key", file);
    }
    return b;
}

crypto::SignedServerParam read_server_param(const fs::path& file) {
    try {
        return server_param_from_json(read_text(file));
    } catch (const TunnelError& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        config_error(file.string() + ": " + e.what());
    }
}

Bytes read_secret(const fs::path& file) { return b64_member(parse_file(file), "secret", file); }

std::string fingerprint_hex(const crypto::Fingerprint& fp) { return hex_encode(fp); }

crypto::Fingerprint parse_fingerprint(std::string_view text) {
    std::string hex;
    for (char c : text) {
        if (c != ':') hex.push_back(c);
    }
    if (hex.size() != 64) config_error("fingerprint must be 64 hex characters");
    try {
        return to_fixed<32>(hex_decode(hex));
    } catch (const TunnelError&) {
        config_error("fingerprint is not hex");
    }
}

std::map<std::string, UserRecord> load_users(const fs::path& file) {
    std::map<std::string, UserRecord> users;
    if (!fs::exists(file)) return users;
    auto j = parse_file(file);
    auto it = j.find("users");
    if (it == j.end() || !it->is_object()) config_error(file.string() + ": missing 'users' object");
    for (const auto& [name, rec] : it->items()) {
        if (!rec.is_object()) config_error(file.string() + ": user '" + name + "' is not an object");
        UserRecord r;
        r.salt = b64_member(rec, "salt", file);
        r.verifier = BigNum::from_bytes(b64_member(rec, "verifier", file));
        users.emplace(name, std::move(r));
    }
    return users;
}

void save_users(const fs::path& file, const std::map<std::string, UserRecord>& users) {
    Json out = Json::object();
    for (const auto& [name, rec] : users) {
        out[name] = {{"salt", base64_encode(rec.salt)}, {"verifier", base64_encode(rec.verifier.to_bytes())}};
    }
    write_private(file, Json{{"users", out}}.dump(2) + "\n");
}

ServeSettings load_serve_settings(const fs::path& file) {
    auto j = parse_file(file);
    auto base = file.parent_path();
    auto path_member = [&](const char* name) -> std::optional<fs::path> {
        auto it = j.find(name);
        if (it == j.end()) return std::nullopt;
        if (!it->is_string()) config_error(std::string("'") + name + "' must be a path");
        return resolve(base, it->get<std::string>());
    };

    ServeSettings s;
    if (auto it = j.find("listen"); it != j.end()) {
        if (!it->is_string()) config_error("'listen' must be host:port");
        s.listen = it->get<std::string>();
    }
    auto param = path_member("server_param");
    auto eph = path_member("ephemeral_secret");
    if (!param || !eph) config_error("config needs 'server_param' and 'ephemeral_secret'");
    s.server.signed_param = read_server_param(*param);
    auto secret = read_secret(*eph);
    if (secret.size() != crypto::kPointSize) config_error(eph->string() + ": secret must be 32 bytes");
    s.server.server_ephemeral_secret = to_fixed<crypto::kPointSize>(secret);
    if (auto decoy = path_member("decoy_secret")) s.server.decoy_secret = read_secret(*decoy);
    if (auto users = path_member("users")) {
        if (!fs::exists(*users)) config_error("cannot read " + users->string());
        s.server.users = load_users(*users);
    }
    if (auto it = j.find("enforce_encryption"); it != j.end()) {
        if (!it->is_boolean()) config_error("'enforce_encryption' must be true or false");
        s.server.enforce_encryption = it->get<bool>();
    }
    if (auto it = j.find("session"); it != j.end()) {
        if (!it->is_object()) config_error("'session' must be an object");
        auto& sc = s.server.session;
        sc.ttl = int_member(*it, "ttl", sc.ttl);
        sc.grace = int_member(*it, "grace", sc.grace);
        sc.window.max_age = int_member(*it, "max_age", sc.window.max_age);
        sc.window.future_skew = int_member(*it, "future_skew", sc.window.future_skew);
    }
    return s;
}

}  // namespace tunnel::keyfile
