#include "totpsi/transport.hpp"

#include <arpa/inet.h>
#include <chrono>
#include <cstring>
#include <netdb.h>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>

namespace totpsi {

Bytes Frame::serialize() const {
    if (payload.size() > kMaxFrameBytes - 32) throw MalformedFrame("frame payload too large");
    Bytes out;
    out.reserve(wire_size());
    out.insert(out.end(), session_id.begin(), session_id.end());
    out.push_back(sender);
    out.push_back(receiver);
    out.push_back(static_cast<std::uint8_t>(phase));
    out.push_back(static_cast<std::uint8_t>(kind));
    auto put_u32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put_u32(bin);
    put_u32(slot);
    put_u32(static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Frame Frame::deserialize(const std::uint8_t* data, std::size_t len) {
    if (len < 32) throw MalformedFrame("frame header truncated");
    auto get_u32 = [data](std::size_t off) {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | data[off + static_cast<std::size_t>(i)];
        return v;
    };
    Frame f;
    std::memcpy(f.session_id.data(), data, 16);
    f.sender = data[16];
    f.receiver = data[17];
    f.phase = static_cast<Phase>(data[18]);
    f.kind = static_cast<MsgKind>(data[19]);
    f.bin = get_u32(20);
    f.slot = get_u32(24);
    std::uint32_t plen = get_u32(28);
    if (plen > kMaxFrameBytes - 32) throw MalformedFrame("frame payload too large");
    if (len != 32 + plen) throw MalformedFrame("frame length mismatch");
    f.payload.assign(data + 32, data + len);
    return f;
}

std::size_t Transcript::total_bytes() const {
    std::size_t total = 0;
    for (const auto& e : entries) total += e.frame.wire_size();
    return total;
}

std::size_t Transcript::bytes_with(std::uint8_t peer) const {
    std::size_t total = 0;
    for (const auto& e : entries)
        if ((e.outgoing && e.frame.receiver == peer) || (!e.outgoing && e.frame.sender == peer))
            total += e.frame.wire_size();
    return total;
}

Comm::Comm(std::shared_ptr<PartyLink> link, int self, int n, double timeout_secs,
           Transcript* transcript)
    : link_(std::move(link)), self_(self), n_(n), timeout_(timeout_secs),
      transcript_(transcript), start_(std::chrono::steady_clock::now()) {}

void Comm::note(const Frame& f, bool outgoing) {
    if (!transcript_) return;
    double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    transcript_->entries.push_back({outgoing, t, f});
}

void Comm::send(Frame f) {
    f.sender = static_cast<std::uint8_t>(self_);
    note(f, true);
    link_->send_frame(f);
}

Frame Comm::recv(std::uint8_t from, MsgKind kind, std::uint32_t bin, std::uint32_t slot) {
    auto matches = [&](const Frame& f) {
        return f.sender == from && f.kind == kind && f.bin == bin && f.slot == slot;
    };
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
        if (matches(*it)) {
            Frame f = std::move(*it);
            pending_.erase(it);
            return f;
        }
    }
    for (;;) {
        Frame f = link_->recv_frame(timeout_);
        note(f, false);
        if (f.kind == MsgKind::Abort) throw ProtocolAbort("peer aborted the session");
        if (matches(f)) return f;
        pending_.push_back(std::move(f));
    }
}

Frame Comm::recv_any_bin(std::uint8_t from, MsgKind kind) {
    auto matches = [&](const Frame& f) { return f.sender == from && f.kind == kind; };
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
        if (matches(*it)) {
            Frame f = std::move(*it);
            pending_.erase(it);
            return f;
        }
    }
    for (;;) {
        Frame f = link_->recv_frame(timeout_);
        note(f, false);
        if (f.kind == MsgKind::Abort) throw ProtocolAbort("peer aborted the session");
        if (matches(f)) return f;
        pending_.push_back(std::move(f));
    }
}

class SimLink : public PartyLink {
  public:
    SimLink(SimNetwork* net, int self) : net_(net), self_(self) {}

    void send_frame(const Frame& f) override {
        if (f.receiver == static_cast<std::uint8_t>(self_))
            throw MalformedFrame("self-addressed frame");
        if (f.receiver >= net_->n_) throw MalformedFrame("receiver index out of range");
        auto* box = net_->boxes_[f.receiver].get();
        // round-trip through the wire encoding so simulated and TCP runs see
        // byte-identical traffic
        Bytes wire = f.serialize();
        Frame copy = Frame::deserialize(wire.data(), wire.size());
        {
            std::lock_guard<std::mutex> lock(box->mu);
            box->queue.push_back(std::move(copy));
        }
        box->cv.notify_all();
    }

    Frame recv_frame(double timeout_secs) override {
        auto* box = net_->boxes_[static_cast<std::size_t>(self_)].get();
        std::unique_lock<std::mutex> lock(box->mu);
        auto deadline =
            std::chrono::steady_clock::now() +
            std::chrono::milliseconds(static_cast<long>(timeout_secs * 1000.0));
        if (!box->cv.wait_until(lock, deadline, [&] { return !box->queue.empty(); }))
            throw Timeout("simulated recv timed out");
        Frame f = std::move(box->queue.front());
        box->queue.pop_front();
        return f;
    }

  private:
    SimNetwork* net_;
    int self_;
};

SimNetwork::SimNetwork(int n) : n_(n) {
    boxes_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) boxes_.push_back(std::make_shared<Mailbox>());
}

std::shared_ptr<PartyLink> SimNetwork::link(int party) {
    if (party < 0 || party >= n_) throw ConfigError("party index out of range");
    return std::make_shared<SimLink>(this, party);
}

// ---------------------------------------------------------------------------
// TCP mesh

namespace {

struct FdCloser {
    int fd = -1;
    ~FdCloser() {
        if (fd >= 0) close(fd);
    }
};

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t w = ::send(fd, data, len, MSG_NOSIGNAL);
        if (w <= 0) throw PeerDisconnect("tcp send failed");
        data += w;
        len -= static_cast<std::size_t>(w);
    }
}

bool read_all(int fd, std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t r = ::recv(fd, data, len, 0);
        if (r == 0) return false;
        if (r < 0) throw PeerDisconnect("tcp recv failed");
        data += r;
        len -= static_cast<std::size_t>(r);
    }
    return true;
}

class TcpLink : public PartyLink {
  public:
    TcpLink(int n, int self) : n_(n), self_(self), fds_(static_cast<std::size_t>(n), -1),
                               send_mus_(static_cast<std::size_t>(n)) {}

    ~TcpLink() override {
        shutdown_all();
        for (auto& t : readers_)
            if (t.joinable()) t.join();
        for (int fd : fds_)
            if (fd >= 0) close(fd);
    }

    void attach(int peer, int fd) { fds_[static_cast<std::size_t>(peer)] = fd; }

    void start_readers() {
        for (int peer = 0; peer < n_; ++peer) {
            if (peer == self_) continue;
            int fd = fds_[static_cast<std::size_t>(peer)];
            readers_.emplace_back([this, fd] { reader_loop(fd); });
        }
    }

    void send_frame(const Frame& f) override {
        int peer = f.receiver;
        if (peer < 0 || peer >= n_ || fds_[static_cast<std::size_t>(peer)] < 0)
            throw PeerDisconnect("no connection to peer");
        Bytes wire = f.serialize();
        std::lock_guard<std::mutex> lock(send_mus_[static_cast<std::size_t>(peer)]);
        write_all(fds_[static_cast<std::size_t>(peer)], wire.data(), wire.size());
    }

    Frame recv_frame(double timeout_secs) override {
        std::unique_lock<std::mutex> lock(mu_);
        auto deadline =
            std::chrono::steady_clock::now() +
            std::chrono::milliseconds(static_cast<long>(timeout_secs * 1000.0));
        while (inbox_.empty()) {
            // A peer that already sent everything we need may exit early; only
            // give up once no socket can deliver another frame.
            if (closed_readers_ == n_ - 1) throw PeerDisconnect("all peers disconnected");
            if (cv_.wait_until(lock, deadline) == std::cv_status::timeout && inbox_.empty())
                throw Timeout("tcp recv timed out");
        }
        Frame f = std::move(inbox_.front());
        inbox_.pop_front();
        return f;
    }

  private:
    void reader_loop(int fd) {
        try {
            for (;;) {
                std::uint8_t header[32];
                if (!read_all(fd, header, sizeof(header))) break;
                std::uint32_t plen = 0;
                for (int i = 3; i >= 0; --i)
                    plen = (plen << 8) | header[28 + static_cast<std::size_t>(i)];
                if (plen > kMaxFrameBytes - 32) break;
                Bytes buf(32 + plen);
                std::memcpy(buf.data(), header, 32);
                if (plen > 0 && !read_all(fd, buf.data() + 32, plen)) break;
                Frame f = Frame::deserialize(buf.data(), buf.size());
                {
                    std::lock_guard<std::mutex> lock(mu_);
                    inbox_.push_back(std::move(f));
                }
                cv_.notify_all();
            }
        } catch (const Error&) {
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++closed_readers_;
        }
        cv_.notify_all();
    }

    void shutdown_all() {
        for (int fd : fds_)
            if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
    }

    int n_, self_;
    std::vector<int> fds_;
    std::vector<std::mutex> send_mus_;
    std::vector<std::thread> readers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Frame> inbox_;
    int closed_readers_ = 0;
};

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& ep) {
    auto pos = ep.rfind(':');
    if (pos == std::string::npos) throw ConfigError("endpoint must be host:port");
    return {ep.substr(0, pos), static_cast<std::uint16_t>(std::stoi(ep.substr(pos + 1)))};
}

int listen_on(const std::string& host, std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw PeerDisconnect("socket() failed");
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = host.empty() || host == "0.0.0.0"
                               ? INADDR_ANY
                               : inet_addr(host.c_str());
    if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        listen(fd, 64) != 0) {
        close(fd);
        throw PeerDisconnect("bind/listen failed on " + host + ":" + std::to_string(port));
    }
    return fd;
}

int connect_with_retry(const std::string& host, std::uint16_t port, double timeout_secs) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(timeout_secs * 1000.0));
    for (;;) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw PeerDisconnect("socket() failed");
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        addr.sin_addr.s_addr = inet_addr(host == "localhost" ? "127.0.0.1" : host.c_str());
        if (connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) return fd;
        close(fd);
        if (std::chrono::steady_clock::now() > deadline)
            throw Timeout("could not connect to " + host + ":" + std::to_string(port));
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

} // namespace

std::shared_ptr<PartyLink> tcp_mesh_connect(const std::vector<std::string>& endpoints,
                                            int self, double timeout_secs) {
    const int n = static_cast<int>(endpoints.size());
    auto link = std::make_shared<TcpLink>(n, self);

    FdCloser listener;
    if (self < n - 1) {
        auto [host, port] = split_endpoint(endpoints[static_cast<std::size_t>(self)]);
        listener.fd = listen_on(host, port);
    }
    // connect to lower-index peers, identifying ourselves with one byte
    for (int peer = 0; peer < self; ++peer) {
        auto [host, port] = split_endpoint(endpoints[static_cast<std::size_t>(peer)]);
        int fd = connect_with_retry(host, port, timeout_secs);
        std::uint8_t id = static_cast<std::uint8_t>(self);
        write_all(fd, &id, 1);
        link->attach(peer, fd);
    }
    // accept from higher-index peers
    for (int count = self + 1; count < n; ++count) {
        int fd = ::accept(listener.fd, nullptr, nullptr);
        if (fd < 0) throw PeerDisconnect("accept failed");
        std::uint8_t id = 0;
        if (!read_all(fd, &id, 1)) throw PeerDisconnect("peer hello missing");
        if (id <= self || id >= n) {
            close(fd);
            throw MalformedFrame("unexpected peer id in hello");
        }
        link->attach(id, fd);
    }
    link->start_readers();
    return link;
}

namespace {

class ReplayLink : public PartyLink {
  public:
    explicit ReplayLink(const Transcript& t) : transcript_(t) {}

    void send_frame(const Frame& f) override {
        Bytes got = f.serialize();
        for (; next_ < transcript_.entries.size(); ++next_) {
            const auto& e = transcript_.entries[next_];
            if (!e.outgoing) continue;
            ++next_;
            if (e.frame.serialize() != got)
                throw MalformedFrame("replay: outgoing frame diverges from transcript");
            return;
        }
        throw MalformedFrame("replay: unexpected extra send");
    }

    Frame recv_frame(double) override {
        for (; next_ < transcript_.entries.size(); ++next_) {
            const auto& e = transcript_.entries[next_];
            if (e.outgoing) continue;
            ++next_;
            return e.frame;
        }
        throw Timeout("replay: transcript exhausted");
    }

  private:
    const Transcript& transcript_;
    std::size_t next_ = 0;
};

} // namespace

std::shared_ptr<PartyLink> replay_link(const Transcript& transcript) {
    return std::make_shared<ReplayLink>(transcript);
}

} // namespace totpsi
