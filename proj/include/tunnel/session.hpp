#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tunnel/packet.hpp"
#include "tunnel/srp.hpp"

namespace tunnel {

struct SessionConfig {
    std::int64_t ttl = 900;
    std::int64_t grace = 30;
    ReplayWindow window{};

    /// Nonces are kept for the whole acceptance window, future skew included.
    std::int64_t nonce_retention() const { return window.max_age + window.future_skew; }
};

struct Session {
    Uid uid{};
    crypto::SessionKey key;
    std::int64_t created_at = 0;
    std::int64_t expires_at = 0;
    bool encrypted = true;
    std::optional<std::string> access_token;
    std::optional<std::string> refresh_token;
    // Set only between a refresh and the end of its grace period; valid on the refresh route only.
    std::optional<crypto::SessionKey> previous_key;
    std::int64_t previous_key_until = 0;
    // Sessions restored from a snapshot reject packets stamped before the restore.
    std::int64_t not_before = 0;

    bool expired_at(std::int64_t now) const { return now > expires_at; }
};

enum class LookupStatus { Live, Expired, Unknown };

struct LookupResult {
    LookupStatus status = LookupStatus::Unknown;
    std::optional<Session> session;
};

/// Seen (uid, nonce) pairs. Check and insert happen under one lock.
class NonceCache {
public:
    explicit NonceCache(std::int64_t retention = 125) : retention_(retention) {}

    /// True if the nonce was fresh and is now recorded; false on replay.
    bool check_and_record(const Uid& uid, const Nonce& nonce, std::int64_t now);
    void evict(std::int64_t now);
    void forget(const Uid& uid);
    std::size_t size() const;

private:
    void evict_locked(std::int64_t now);

    std::int64_t retention_;
    mutable std::mutex mutex_;
    std::map<Uid, std::map<Nonce, std::int64_t>> seen_;
    std::int64_t last_eviction_ = 0;
};

/// Binary snapshot: magic "ATS1", then records of u32 big-endian length + payload.
void write_snapshot(std::ostream& out, const std::vector<Session>& sessions);
std::vector<Session> read_snapshot(std::istream& in);

/// Server-side session registry. All operations are atomic per call.
class SessionStore {
public:
    explicit SessionStore(RandomSource& rng, SessionConfig config = {});

    const SessionConfig& config() const noexcept { return config_; }

    Uid create_session(const crypto::SessionKey& key, std::int64_t now, std::optional<std::int64_t> ttl = {});
    /// Migration-period session that never carries a key.
    Uid create_plain_session(std::int64_t now, std::optional<std::int64_t> ttl = {});

    /// Expired iff now > expires_at.
    LookupResult lookup(const Uid& uid, std::int64_t now) const;

    /// Keys accepted on the refresh route: the current key and, during grace, the previous one.
    std::vector<crypto::SessionKey> refresh_keys(const Uid& uid, std::int64_t now) const;

    /// Throws UnknownSession or GraceExpired (now > expires_at + grace).
    void refresh_session(const Uid& uid, const crypto::SessionKey& new_key, std::int64_t now,
                         std::optional<std::int64_t> ttl = {});

    /// Replaces the key with the SRP-derived one; the previous key stops working at once.
    void rekey_from_srp(const Uid& uid, const crypto::Digest& k);

    /// Throws ReplayDetected.
    void check_and_record_nonce(const Uid& uid, const Nonce& nonce, std::int64_t now);

    void bind_tokens(const Uid& uid, std::string access_token, std::string refresh_token);

    void park_srp(const Uid& uid, srp::SrpState state);
    std::optional<srp::SrpState> take_srp(const Uid& uid);

    void remove(const Uid& uid);
    /// Drops sessions past expiry and grace.
    std::size_t purge(std::int64_t now);
    std::size_t size() const;

    std::vector<Session> snapshot() const;
    /// Loads sessions from a snapshot; each rejects packets stamped before `now`.
    void restore(const std::vector<Session>& sessions, std::int64_t now);

private:
    Session& require(const Uid& uid);

    RandomSource& rng_;
    SessionConfig config_;
    mutable std::mutex mutex_;
    std::map<Uid, Session> sessions_;
    std::map<Uid, srp::SrpState> pending_srp_;
    NonceCache nonces_;
};

}  // namespace tunnel
