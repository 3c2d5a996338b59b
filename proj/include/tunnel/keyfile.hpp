#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tunnel/server.hpp"

namespace tunnel::keyfile {

namespace fs = std::filesystem;

inline constexpr std::string_view kSigningKeyFile = "signing_key.json";
inline constexpr std::string_view kEphemeralFile = "server_ephemeral.json";
inline constexpr std::string_view kParamFile = "server_param.json";
inline constexpr std::string_view kDecoyFile = "decoy_secret.json";

/// Output of the offline key ceremony. Only the signed parameter and the
/// ephemeral secret are meant to reach the server host.
struct KeyBundle {
    crypto::SigningKeypair signing;
    crypto::Point ephemeral_secret{};
    crypto::SignedServerParam param;
    Bytes decoy_secret;

    crypto::Fingerprint fingerprint() const { return param.signer_fingerprint; }
};

KeyBundle generate(RandomSource& rng);

/// Creates `dir` and writes one file per secret (mode 0600) plus the public
/// server_param.json. Throws PathExists if `dir` already exists.
void write_bundle(const fs::path& dir, const KeyBundle& bundle);

/// Reads the files written by write_bundle. The signing key file is optional.
KeyBundle read_bundle(const fs::path& dir);

crypto::SignedServerParam read_server_param(const fs::path& file);
/// {"secret": base64}
Bytes read_secret(const fs::path& file);

std::string fingerprint_hex(const crypto::Fingerprint& fp);
/// 64 hex characters, colons allowed. Throws ConfigError.
crypto::Fingerprint parse_fingerprint(std::string_view text);

/// {"users": {name: {"salt", "verifier"}}}. A missing file yields no users.
std::map<std::string, UserRecord> load_users(const fs::path& file);
void save_users(const fs::path& file, const std::map<std::string, UserRecord>& users);

/// serve settings: a JSON file mirroring ServerConfig, with secrets referenced
/// by path relative to the file itself.
///   {"listen", "server_param", "ephemeral_secret", "decoy_secret"?, "users"?,
///    "enforce_encryption"?, "session"?: {"ttl", "grace", "max_age", "future_skew"}}
struct ServeSettings {
    std::string listen = "127.0.0.1:8080";
    ServerConfig server;
};

/// Throws ConfigError for anything missing or malformed.
ServeSettings load_serve_settings(const fs::path& file);

std::string read_text(const fs::path& file);
/// Writes with mode 0600, replacing any existing file.
void write_private(const fs::path& file, std::string_view content);

}  // namespace tunnel::keyfile
