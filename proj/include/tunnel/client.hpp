#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>

#include "tunnel/http.hpp"
#include "tunnel/session.hpp"
#include "tunnel/srp.hpp"

namespace tunnel {

enum class ClientState { Handshaking, Active, Refreshing, Closed };

std::string_view to_string(ClientState state);

/// What a client needs to resume a tunnel without a new handshake.
struct ClientSessionData {
    Uid uid{};
    crypto::SessionKey key;
    crypto::Point q_point{};
    crypto::Fingerprint fingerprint{};

    std::string to_json() const;
    static ClientSessionData from_json(std::string_view json);
};

/// SRP challenge as received from /auth/info.
struct SrpChallenge {
    srp::SrpParams params;
    BigNum server_s;
};

/// Client SDK. Safe to share between threads: requests issued while a
/// refresh or login is in flight wait in a FIFO queue and are replayed in order.
class TunnelClient {
public:
    TunnelClient(std::shared_ptr<Transport> transport, crypto::Fingerprint pinned_fingerprint, RandomSource& rng,
                 Clock clock = system_clock());

    /// GET, verify against the pin, then POST V. Nothing is posted if verification fails.
    void handshake();
    void resume(const ClientSessionData& data);
    ClientSessionData session_data() const;

    /// Seals `request`, refreshing the key transparently on KeyExpired. Returns the
    /// inner response, including tunnel-layer errors (those carry X-Tunnel-Error).
    /// Throws TunnelError for cleartext errors and transport failures.
    InnerMessage exchange(const InnerMessage& request);
    /// Like exchange(), but raises tunnel-layer errors as TunnelError.
    InnerMessage send(const InnerMessage& request);

    /// Full SRP login inside the tunnel; on success the SRP-derived key replaces the current one.
    /// Throws ProofRejected (wrong password), ServerProofInvalid or UntrustedGroup.
    /// Returns the server's /auth response (it carries the token cookies).
    InnerMessage login(std::string_view identity, std::string_view password);
    /// First half of login: POST /auth/info.
    SrpChallenge request_challenge(std::string_view identity);
    /// Second half: POST /auth with a prepared response, verify P_S, swap the key.
    InnerMessage complete_login(const srp::ClientResponse& response);

    /// Explicit PUT /tunnel/key refresh.
    void refresh();

    /// Cookie sent in the cleartext outer headers (secure-cookie path).
    void set_outer_cookie(std::string name, std::string value);

    ClientState state() const;
    /// Requests waiting for a refresh or login to finish.
    std::size_t pending() const;
    Uid uid() const;
    crypto::SessionKey key() const;
    std::uint64_t packets_sent() const noexcept { return packets_sent_.load(); }

private:
    struct Pending {
        InnerMessage request;
        std::promise<InnerMessage> done;
    };
    struct Transmitted {
        bool key_expired = false;
        InnerMessage response;
    };

    Transmitted transmit(const crypto::SessionKey& key, const InnerMessage& request);
    InnerMessage open_response(const crypto::SessionKey& key, const HttpResponse& response);
    [[noreturn]] void throw_plain_error(const HttpResponse& response) const;
    crypto::SessionKey perform_refresh(const crypto::SessionKey& current);
    /// Caller holds the gate (state_ == Refreshing); replays queued requests then reopens.
    void flush_queue();
    void close_with(ErrorCode code);
    std::future<InnerMessage> enqueue_locked(const InnerMessage& request);
    void acquire_gate(std::unique_lock<std::mutex>& lock);
    InnerMessage check_tunnel_error(InnerMessage response);

    std::shared_ptr<Transport> transport_;
    crypto::Fingerprint pinned_;
    RandomSource& rng_;
    Clock clock_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    ClientState state_ = ClientState::Handshaking;
    Uid uid_{};
    crypto::SessionKey key_;
    crypto::Point q_point_{};
    std::uint64_t key_epoch_ = 0;
    int in_flight_ = 0;
    std::deque<std::shared_ptr<Pending>> queue_;
    HeaderList outer_cookies_;

    // Responses carry the server's clock, so only their nonces are checked.
    NonceCache response_nonces_;
    std::atomic<int> window_errors_{0};
    std::atomic<std::uint64_t> packets_sent_{0};
};

}  // namespace tunnel
