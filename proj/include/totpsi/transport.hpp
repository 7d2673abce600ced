#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "totpsi/errors.hpp"

namespace totpsi {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxFrameBytes = 16u << 20; // 16 MiB

enum class Phase : std::uint8_t {
    Setup = 0,
    Share = 1,
    Update = 2,
    Collect = 3,
};

enum class MsgKind : std::uint8_t {
    SessionSetup = 1,
    SetupAck = 2,
    SetupRetry = 3,
    OpprfRequest = 4,  // phase 1: receiver's blinded query (table backend)
    OpprfResponse = 5, // phase 1: hint (+ OPRF evaluation)
    ZeroShare = 6,     // ET phase 2: batched f_{i,b}(j+1) per bin
    ZeroAtOne = 7,     // ST phase 2: batched f_{j,b}(1) per bin, to the leader
    OleRequest = 8,
    OleResponse = 9,
    CollectRequest = 10, // phase 3 value OPPRF
    CollectResponse = 11,
    IndexRequest = 12, // phase 3 index OPPRF (ST)
    IndexResponse = 13,
    Abort = 14,
};

struct Frame {
    std::array<std::uint8_t, 16> session_id{};
    std::uint8_t sender = 0;
    std::uint8_t receiver = 0;
    Phase phase = Phase::Setup;
    MsgKind kind = MsgKind::SessionSetup;
    std::uint32_t bin = 0;
    std::uint32_t slot = 0;
    Bytes payload;

    Bytes serialize() const;
    static Frame deserialize(const std::uint8_t* data, std::size_t len);
    std::size_t wire_size() const { return 32 + payload.size(); }
};

struct TranscriptEntry {
    bool outgoing;
    double timestamp; // seconds since session start
    Frame frame;
};

struct Transcript {
    std::vector<TranscriptEntry> entries;
    std::size_t total_bytes() const;
    std::size_t bytes_with(std::uint8_t peer) const;
};

// Raw duplex link of one party to the mesh: ordered reliable delivery.
class PartyLink {
  public:
    virtual ~PartyLink() = default;
    virtual void send_frame(const Frame& f) = 0;
    // Next inbound frame in arrival order; throws Timeout.
    virtual Frame recv_frame(double timeout_secs) = 0;
};

// Buffering/matching wrapper used by the protocol code; optionally records a
// transcript.
class Comm {
  public:
    Comm(std::shared_ptr<PartyLink> link, int self, int n, double timeout_secs,
         Transcript* transcript = nullptr);

    void send(Frame f);
    // Blocks until a frame from `from` with the given kind/bin/slot arrives;
    // other frames are buffered.
    Frame recv(std::uint8_t from, MsgKind kind, std::uint32_t bin, std::uint32_t slot);
    // Any-bin variant; returns the first matching buffered or inbound frame.
    Frame recv_any_bin(std::uint8_t from, MsgKind kind);
    // General predicate variant.
    template <typename Pred> Frame recv_match(Pred&& pred);

    int self() const { return self_; }
    int n() const { return n_; }
    double timeout() const { return timeout_; }

  private:
    std::shared_ptr<PartyLink> link_;
    int self_, n_;
    double timeout_;
    Transcript* transcript_;
    std::deque<Frame> pending_;
    std::chrono::steady_clock::time_point start_;
    void note(const Frame& f, bool outgoing);
};

template <typename Pred> Frame Comm::recv_match(Pred&& pred) {
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
        if (pred(*it)) {
            Frame f = std::move(*it);
            pending_.erase(it);
            return f;
        }
    }
    for (;;) {
        Frame f = link_->recv_frame(timeout_);
        note(f, false);
        if (f.kind == MsgKind::Abort) throw ProtocolAbort("peer aborted the session");
        if (pred(f)) return f;
        pending_.push_back(std::move(f));
    }
}

// In-process lossless network; parties run as threads sharing one instance.
class SimNetwork {
  public:
    explicit SimNetwork(int n);
    std::shared_ptr<PartyLink> link(int party);

  private:
    struct Mailbox {
        std::mutex mu;
        std::condition_variable cv;
        std::deque<Frame> queue;
        bool closed = false;
    };
    int n_;
    std::vector<std::shared_ptr<Mailbox>> boxes_;
    friend class SimLink;
};

// TCP mesh: party i listens on endpoints[i], connects to all j < i, accepts
// from all j > i. Application-level framing per Frame::serialize.
std::shared_ptr<PartyLink> tcp_mesh_connect(const std::vector<std::string>& endpoints,
                                            int self, double timeout_secs);

// Deterministic replay of a recorded transcript: recv_frame serves the
// recorded inbound frames in order; send_frame checks byte-identity against
// the recorded outbound frames.
std::shared_ptr<PartyLink> replay_link(const Transcript& transcript);

} // namespace totpsi
