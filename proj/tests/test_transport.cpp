#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <set>
#include <thread>

#include "totpsi/transport.hpp"

using namespace totpsi;

namespace {

Frame make_frame(std::uint8_t sender, std::uint8_t receiver, MsgKind kind, std::uint32_t bin,
                 std::uint32_t slot, Bytes payload) {
    Frame f;
    f.session_id = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    f.sender = sender;
    f.receiver = receiver;
    f.phase = Phase::Share;
    f.kind = kind;
    f.bin = bin;
    f.slot = slot;
    f.payload = std::move(payload);
    return f;
}

bool same_frame(const Frame& a, const Frame& b) {
    return a.session_id == b.session_id && a.sender == b.sender && a.receiver == b.receiver &&
           a.phase == b.phase && a.kind == b.kind && a.bin == b.bin && a.slot == b.slot &&
           a.payload == b.payload;
}

} // namespace

TEST_CASE("frame serialization round trip") {
    Frame f = make_frame(3, 7, MsgKind::ZeroShare, 0xdeadbeef, 42, {0xaa, 0xbb, 0xcc});
    Bytes wire = f.serialize();
    CHECK(wire.size() == 35);
    Frame g = Frame::deserialize(wire.data(), wire.size());
    CHECK(same_frame(f, g));

    Frame empty = make_frame(0, 1, MsgKind::SetupAck, 0, 0, {});
    Bytes w2 = empty.serialize();
    CHECK(w2.size() == 32);
    CHECK(same_frame(empty, Frame::deserialize(w2.data(), w2.size())));
}

TEST_CASE("frame header layout is little-endian at fixed offsets") {
    Frame f = make_frame(1, 2, MsgKind::OleRequest, 0x01020304, 0x0a0b0c0d, {9});
    Bytes w = f.serialize();
    CHECK(w[0] == 1);  // session_id[0]
    CHECK(w[15] == 16);
    CHECK(w[16] == 1); // sender
    CHECK(w[17] == 2); // receiver
    CHECK(w[18] == static_cast<std::uint8_t>(Phase::Share));
    CHECK(w[19] == static_cast<std::uint8_t>(MsgKind::OleRequest));
    CHECK(w[20] == 0x04);
    CHECK(w[21] == 0x03);
    CHECK(w[22] == 0x02);
    CHECK(w[23] == 0x01);
    CHECK(w[24] == 0x0d);
    CHECK(w[25] == 0x0c);
    CHECK(w[26] == 0x0b);
    CHECK(w[27] == 0x0a);
    CHECK(w[28] == 1); // payload length
    CHECK(w[29] == 0);
    CHECK(w[30] == 0);
    CHECK(w[31] == 0);
    CHECK(w[32] == 9);
}

TEST_CASE("malformed frames are rejected") {
    Frame f = make_frame(0, 1, MsgKind::OpprfRequest, 1, 2, {1, 2, 3, 4});
    Bytes w = f.serialize();
    CHECK_THROWS_AS(Frame::deserialize(w.data(), 31), MalformedFrame);          // short header
    CHECK_THROWS_AS(Frame::deserialize(w.data(), w.size() - 1), MalformedFrame); // truncated body
    CHECK_THROWS_AS(Frame::deserialize(w.data(), w.size() + 1), MalformedFrame); // trailing junk

    Bytes big = w;
    std::uint32_t huge = static_cast<std::uint32_t>(kMaxFrameBytes);
    for (int i = 0; i < 4; ++i) big[28 + i] = static_cast<std::uint8_t>(huge >> (8 * i));
    CHECK_THROWS_AS(Frame::deserialize(big.data(), big.size()), MalformedFrame);

    Frame oversize = make_frame(0, 1, MsgKind::OpprfRequest, 0, 0, {});
    oversize.payload.resize(kMaxFrameBytes);
    CHECK_THROWS_AS(oversize.serialize(), MalformedFrame);
}

TEST_CASE("sim network delivers in order and wakes blocked receivers") {
    SimNetwork net(2);
    auto a = net.link(0);
    auto b = net.link(1);
    for (std::uint32_t i = 0; i < 100; ++i)
        a->send_frame(make_frame(0, 1, MsgKind::ZeroShare, i, 0, {static_cast<std::uint8_t>(i)}));
    for (std::uint32_t i = 0; i < 100; ++i) {
        Frame f = b->recv_frame(1.0);
        CHECK(f.bin == i);
    }
    // blocked receive unblocked by a late sender
    std::thread sender([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        b->send_frame(make_frame(1, 0, MsgKind::SetupAck, 7, 0, {}));
    });
    Frame f = a->recv_frame(5.0);
    sender.join();
    CHECK(f.bin == 7);
    CHECK_THROWS_AS(a->recv_frame(0.05), Timeout);
}

TEST_CASE("comm buffers out-of-order frames") {
    SimNetwork net(3);
    auto l0 = net.link(0);
    Comm c0(l0, 0, 3, 5.0);
    net.link(1)->send_frame(make_frame(1, 0, MsgKind::ZeroShare, 5, 0, {1}));
    net.link(1)->send_frame(make_frame(1, 0, MsgKind::ZeroShare, 2, 0, {2}));
    net.link(2)->send_frame(make_frame(2, 0, MsgKind::OleRequest, 0, 3, {3}));

    // ask for the later frames first; earlier ones must be buffered, not lost
    Frame f = c0.recv(2, MsgKind::OleRequest, 0, 3);
    CHECK(f.payload == Bytes{3});
    f = c0.recv(1, MsgKind::ZeroShare, 2, 0);
    CHECK(f.payload == Bytes{2});
    f = c0.recv_any_bin(1, MsgKind::ZeroShare);
    CHECK(f.bin == 5);
}

TEST_CASE("comm recv_match and abort propagation") {
    SimNetwork net(2);
    Comm c0(net.link(0), 0, 2, 5.0);
    auto l1 = net.link(1);
    l1->send_frame(make_frame(1, 0, MsgKind::ZeroShare, 9, 1, {}));
    Frame f = c0.recv_match(
        [](const Frame& fr) { return fr.kind == MsgKind::ZeroShare && fr.slot == 1; });
    CHECK(f.bin == 9);

    Frame abort = make_frame(1, 0, MsgKind::Abort, 0, 0, {});
    l1->send_frame(abort);
    CHECK_THROWS_AS(c0.recv(1, MsgKind::ZeroShare, 0, 0), ProtocolAbort);
}

TEST_CASE("fifo stress: 100k frames keep order and content") {
    SimNetwork net(2);
    auto a = net.link(0);
    auto b = net.link(1);
    const std::uint32_t count = 100000;
    std::thread producer([&] {
        for (std::uint32_t i = 0; i < count; ++i) {
            Bytes payload(4);
            for (int j = 0; j < 4; ++j) payload[static_cast<std::size_t>(j)] =
                static_cast<std::uint8_t>(i >> (8 * j));
            a->send_frame(make_frame(0, 1, MsgKind::OpprfResponse, i, i ^ 0x5a5a5a5a,
                                     std::move(payload)));
        }
    });
    bool ok = true;
    for (std::uint32_t i = 0; i < count; ++i) {
        Frame f = b->recv_frame(10.0);
        std::uint32_t v = 0;
        for (int j = 0; j < 4; ++j)
            v |= static_cast<std::uint32_t>(f.payload[static_cast<std::size_t>(j)]) << (8 * j);
        ok = ok && f.bin == i && f.slot == (i ^ 0x5a5a5a5a) && v == i;
    }
    producer.join();
    CHECK(ok);
}

TEST_CASE("transcript records both directions with sizes") {
    SimNetwork net(2);
    Transcript t0;
    Comm c0(net.link(0), 0, 2, 5.0, &t0);
    auto l1 = net.link(1);

    c0.send(make_frame(0, 1, MsgKind::ZeroShare, 1, 0, {1, 2, 3}));
    l1->send_frame(make_frame(1, 0, MsgKind::ZeroAtOne, 2, 0, {4, 5}));
    Frame f = c0.recv(1, MsgKind::ZeroAtOne, 2, 0);
    CHECK(f.payload == Bytes{4, 5});

    REQUIRE(t0.entries.size() == 2);
    CHECK(t0.entries[0].outgoing);
    CHECK_FALSE(t0.entries[1].outgoing);
    CHECK(t0.total_bytes() == (32 + 3) + (32 + 2));
    CHECK(t0.bytes_with(1) == t0.total_bytes());
    CHECK(t0.bytes_with(2) == 0);
    CHECK(t0.entries[0].timestamp >= 0.0);
}

TEST_CASE("replay link reproduces a recorded conversation") {
    SimNetwork net(2);
    Transcript t0;
    {
        Comm c0(net.link(0), 0, 2, 5.0, &t0);
        auto l1 = net.link(1);
        c0.send(make_frame(0, 1, MsgKind::OpprfRequest, 3, 0, {7}));
        l1->send_frame(make_frame(1, 0, MsgKind::OpprfResponse, 3, 0, {8, 9}));
        c0.recv(1, MsgKind::OpprfResponse, 3, 0);
        c0.send(make_frame(0, 1, MsgKind::CollectRequest, 4, 0, {10}));
    }
    auto rl = replay_link(t0);
    rl->send_frame(make_frame(0, 1, MsgKind::OpprfRequest, 3, 0, {7}));
    Frame f = rl->recv_frame(1.0);
    CHECK(f.kind == MsgKind::OpprfResponse);
    CHECK(f.payload == Bytes{8, 9});
    rl->send_frame(make_frame(0, 1, MsgKind::CollectRequest, 4, 0, {10}));

    auto rl2 = replay_link(t0);
    // deviating from the recording is an error
    CHECK_THROWS_AS(rl2->send_frame(make_frame(0, 1, MsgKind::OpprfRequest, 3, 0, {99})),
                    MalformedFrame);
}

TEST_CASE("tcp mesh: three parties exchange frames on localhost") {
    std::vector<std::string> endpoints{"127.0.0.1:39101", "127.0.0.1:39102",
                                       "127.0.0.1:39103"};
    std::array<std::shared_ptr<PartyLink>, 3> links;
    std::vector<std::thread> threads;
    for (int i = 0; i < 3; ++i)
        threads.emplace_back([&, i] { links[static_cast<std::size_t>(i)] =
                                          tcp_mesh_connect(endpoints, i, 10.0); });
    for (auto& th : threads) th.join();
    for (int i = 0; i < 3; ++i) REQUIRE(links[static_cast<std::size_t>(i)] != nullptr);

    // full mesh ping: every ordered pair sends one tagged frame
    for (std::uint8_t i = 0; i < 3; ++i)
        for (std::uint8_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            links[i]->send_frame(make_frame(i, j, MsgKind::ZeroShare,
                                            static_cast<std::uint32_t>(i * 10 + j), 0,
                                            Bytes(100, i)));
        }
    for (std::uint8_t j = 0; j < 3; ++j) {
        std::set<std::uint32_t> got;
        for (int k = 0; k < 2; ++k) {
            Frame f = links[j]->recv_frame(10.0);
            CHECK(f.receiver == j);
            CHECK(f.payload == Bytes(100, f.sender));
            got.insert(f.bin);
        }
        CHECK(got.size() == 2);
    }

    // a large frame crosses chunked socket writes intact
    Bytes big(1u << 20);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<std::uint8_t>(i * 31);
    links[0]->send_frame(make_frame(0, 2, MsgKind::OleResponse, 1, 2, big));
    Frame f = links[2]->recv_frame(10.0);
    CHECK(f.payload == big);
}
