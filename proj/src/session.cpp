#include "tunnel/session.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace tunnel {

// --- nonce cache -------------------------------------------------------------

bool NonceCache::check_and_record(const Uid& uid, const Nonce& nonce, std::int64_t now) {
    std::lock_guard lock(mutex_);
    if (now - last_eviction_ >= retention_) evict_locked(now);
    auto& per_uid = seen_[uid];
    std::erase_if(per_uid, [&](const auto& entry) { return now - entry.second > retention_; });
    return per_uid.emplace(nonce, now).second;
}

void NonceCache::evict(std::int64_t now) {
    std::lock_guard lock(mutex_);
    evict_locked(now);
}

void NonceCache::evict_locked(std::int64_t now) {
    for (auto it = seen_.begin(); it != seen_.end();) {
        std::erase_if(it->second, [&](const auto& entry) { return now - entry.second > retention_; });
        it = it->second.empty() ? seen_.erase(it) : std::next(it);
    }
    last_eviction_ = now;
}

void NonceCache::forget(const Uid& uid) {
    std::lock_guard lock(mutex_);
    seen_.erase(uid);
}

std::size_t NonceCache::size() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [_, m] : seen_) n += m.size();
    return n;
}

// --- snapshot ----------------------------------------------------------------

namespace {

constexpr char kSnapshotMagic[4] = {'A', 'T', 'S', '1'};
constexpr std::uint8_t kFlagEncrypted = 0x01;
constexpr std::uint8_t kFlagTokens = 0x02;

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_string(Bytes& out, const std::string& s) {
    if (s.size() > 0xffff) throw TunnelError(ErrorCode::BadRequest, "token too long for snapshot");
    put_u16(out, static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}

    ByteView take(std::size_t n) {
        if (data_.size() - pos_ < n) throw TunnelError(ErrorCode::BadRequest, "truncated snapshot record");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (auto b : take(8)) v = (v << 8) | b;
        return v;
    }
    std::uint16_t u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
    }
    std::string str() { return to_string(take(u16())); }
    bool done() const { return pos_ == data_.size(); }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace

void write_snapshot(std::ostream& out, const std::vector<Session>& sessions) {
    out.write(kSnapshotMagic, sizeof kSnapshotMagic);
    for (const auto& s : sessions) {
        Bytes rec;
        rec.insert(rec.end(), s.uid.begin(), s.uid.end());
        rec.insert(rec.end(), s.key.bytes().begin(), s.key.bytes().end());
        put_u64(rec, static_cast<std::uint64_t>(s.created_at));
        put_u64(rec, static_cast<std::uint64_t>(s.expires_at));
        bool tokens = s.access_token.has_value() && s.refresh_token.has_value();
        rec.push_back(static_cast<std::uint8_t>((s.encrypted ? kFlagEncrypted : 0) | (tokens ? kFlagTokens : 0)));
        if (tokens) {
            put_string(rec, *s.access_token);
            put_string(rec, *s.refresh_token);
        }
        Bytes len;
        put_u32(len, static_cast<std::uint32_t>(rec.size()));
        out.write(reinterpret_cast<const char*>(len.data()), 4);
        out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
    if (!out) throw TunnelError(ErrorCode::Internal, "snapshot write failed");
}

std::vector<Session> read_snapshot(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || !std::equal(magic, magic + 4, kSnapshotMagic)) {
        throw TunnelError(ErrorCode::BadRequest, "not a session snapshot");
    }
    std::vector<Session> out;
    for (;;) {
        std::uint8_t len_bytes[4];
        in.read(reinterpret_cast<char*>(len_bytes), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) throw TunnelError(ErrorCode::BadRequest, "truncated snapshot length");
        std::uint32_t len = (std::uint32_t{len_bytes[0]} << 24) | (std::uint32_t{len_bytes[1]} << 16) |
                            (std::uint32_t{len_bytes[2]} << 8) | std::uint32_t{len_bytes[3]};
        Bytes rec(len);
        in.read(reinterpret_cast<char*>(rec.data()), len);
        if (static_cast<std::uint32_t>(in.gcount()) != len) {
            throw TunnelError(ErrorCode::BadRequest, "truncated snapshot record");
        }
        Reader r(rec);
        Session s;
        s.uid = to_fixed<kUidSize>(r.take(kUidSize));
        s.key = crypto::SessionKey(to_fixed<crypto::kKeySize>(r.take(crypto::kKeySize)));
        s.created_at = static_cast<std::int64_t>(r.u64());
        s.expires_at = static_cast<std::int64_t>(r.u64());
        auto flags = r.take(1)[0];
        s.encrypted = (flags & kFlagEncrypted) != 0;
        if (flags & kFlagTokens) {
            s.access_token = r.str();
            s.refresh_token = r.str();
        }
        if (!r.done()) throw TunnelError(ErrorCode::BadRequest, "trailing bytes in snapshot record");
        out.push_back(std::move(s));
    }
    return out;
}

// --- store -------------------------------------------------------------------

SessionStore::SessionStore(RandomSource& rng, SessionConfig config)
    : rng_(rng), config_(config), nonces_(config.nonce_retention()) {}

Session& SessionStore::require(const Uid& uid) {
    auto it = sessions_.find(uid);
    if (it == sessions_.end()) throw TunnelError(ErrorCode::UnknownSession);
    return it->second;
}

Uid SessionStore::create_session(const crypto::SessionKey& key, std::int64_t now, std::optional<std::int64_t> ttl) {
    std::lock_guard lock(mutex_);
    Session s;
    do {
        s.uid = rng_.draw<kUidSize>();
    } while (sessions_.contains(s.uid));
    s.key = key;
    s.created_at = now;
    s.expires_at = now + ttl.value_or(config_.ttl);
    s.encrypted = true;
    auto uid = s.uid;
    sessions_.emplace(uid, std::move(s));
    return uid;
}

Uid SessionStore::create_plain_session(std::int64_t now, std::optional<std::int64_t> ttl) {
    std::lock_guard lock(mutex_);
    Session s;
    do {
        s.uid = rng_.draw<kUidSize>();
    } while (sessions_.contains(s.uid));
    s.created_at = now;
    s.expires_at = now + ttl.value_or(config_.ttl);
    s.encrypted = false;
    auto uid = s.uid;
    sessions_.emplace(uid, std::move(s));
    return uid;
}

LookupResult SessionStore::lookup(const Uid& uid, std::int64_t now) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(uid);
    if (it == sessions_.end()) return {};
    return {it->second.expired_at(now) ? LookupStatus::Expired : LookupStatus::Live, it->second};
}

std::vector<crypto::SessionKey> SessionStore::refresh_keys(const Uid& uid, std::int64_t now) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(uid);
    if (it == sessions_.end()) return {};
    std::vector<crypto::SessionKey> keys{it->second.key};
    if (it->second.previous_key && now <= it->second.previous_key_until) keys.push_back(*it->second.previous_key);
    return keys;
}

void SessionStore::refresh_session(const Uid& uid, const crypto::SessionKey& new_key, std::int64_t now,
                                   std::optional<std::int64_t> ttl) {
    std::lock_guard lock(mutex_);
    auto& s = require(uid);
    if (now > s.expires_at + config_.grace) throw TunnelError(ErrorCode::GraceExpired);
    s.previous_key = s.key;
    s.previous_key_until = now + config_.grace;
    s.key = new_key;
    s.expires_at = std::max(s.expires_at, now + ttl.value_or(config_.ttl));
}

void SessionStore::rekey_from_srp(const Uid& uid, const crypto::Digest& k) {
    std::lock_guard lock(mutex_);
    auto& s = require(uid);
    s.key = crypto::derive_srp_session_key(k);
    s.previous_key.reset();
    s.previous_key_until = 0;
}

void SessionStore::check_and_record_nonce(const Uid& uid, const Nonce& nonce, std::int64_t now) {
    if (!nonces_.check_and_record(uid, nonce, now)) throw TunnelError(ErrorCode::ReplayDetected);
}

void SessionStore::bind_tokens(const Uid& uid, std::string access_token, std::string refresh_token) {
    std::lock_guard lock(mutex_);
    auto& s = require(uid);
    s.access_token = std::move(access_token);
    s.refresh_token = std::move(refresh_token);
}

void SessionStore::park_srp(const Uid& uid, srp::SrpState state) {
    std::lock_guard lock(mutex_);
    require(uid);
    pending_srp_.insert_or_assign(uid, std::move(state));
}

std::optional<srp::SrpState> SessionStore::take_srp(const Uid& uid) {
    std::lock_guard lock(mutex_);
    auto it = pending_srp_.find(uid);
    if (it == pending_srp_.end()) return std::nullopt;
    auto state = std::move(it->second);
    pending_srp_.erase(it);
    return state;
}

void SessionStore::remove(const Uid& uid) {
    {
        std::lock_guard lock(mutex_);
        sessions_.erase(uid);
        pending_srp_.erase(uid);
    }
    nonces_.forget(uid);
}

std::size_t SessionStore::purge(std::int64_t now) {
    std::vector<Uid> dropped;
    {
        std::lock_guard lock(mutex_);
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (now > it->second.expires_at + config_.grace) {
                dropped.push_back(it->first);
                pending_srp_.erase(it->first);
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (const auto& uid : dropped) nonces_.forget(uid);
    nonces_.evict(now);
    return dropped.size();
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

std::vector<Session> SessionStore::snapshot() const {
    std::lock_guard lock(mutex_);
    std::vector<Session> out;
    out.reserve(sessions_.size());
    for (const auto& [_, s] : sessions_) out.push_back(s);
    return out;
}

void SessionStore::restore(const std::vector<Session>& sessions, std::int64_t now) {
    std::lock_guard lock(mutex_);
    for (auto s : sessions) {
        s.previous_key.reset();
        s.previous_key_until = 0;
        s.not_before = now;
        sessions_.insert_or_assign(s.uid, std::move(s));
    }
}

}  // namespace tunnel
