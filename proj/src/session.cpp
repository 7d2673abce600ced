#include "totpsi/session.hpp"

#include <algorithm>
#include <cstring>
#include <ctime>
#include <nlohmann/json.hpp>
#include <sodium.h>
#include <unordered_set>

namespace totpsi {

namespace {

constexpr std::size_t kChunkBytes = 8u << 20;

void put_u64(Bytes& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[static_cast<std::size_t>(i)];
    return v;
}
void put_u32(Bytes& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[static_cast<std::size_t>(i)];
    return v;
}

} // namespace

void SessionConfig::validate() const {
    if (n < 3) throw ConfigError("need at least 3 parties");
    if (n > 250) throw ConfigError("party count exceeds the 1-byte index space");
    if (t <= 1 || t > n) throw ConfigError("threshold must satisfy 1 < t <= n");
    if (self < 0 || self >= n) throw ConfigError("own index out of range");
    if (m < 1) throw ConfigError("set size must be positive");
    if (lambda < 8 || lambda > 80) throw ConfigError("lambda out of supported range");
    if (timeout_secs <= 0) throw ConfigError("timeout must be positive");
    if (mode == FieldMode::Single && prime < 7) throw ConfigError("prime too small");
}

Modulus SessionConfig::modulus() const {
    if (mode == FieldMode::Crt) return Modulus::from_crt(CrtSystem::make(crt_primes));
    return Modulus(prime);
}

std::vector<Modulus> SessionConfig::channels() const {
    if (mode == FieldMode::Single) return {Modulus(prime)};
    std::vector<Modulus> chs;
    for (auto p : crt_primes) chs.emplace_back(u128{p});
    return chs;
}

std::string IntersectionResult::to_json() const {
    nlohmann::json j;
    j["protocol"] = protocol == Protocol::Et ? "et" : "st";
    j["n"] = n;
    j["t"] = t;
    j["intersection"] = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json entry;
        entry["element"] = "0x" + u128_to_hex(e.element);
        entry["count"] = e.count;
        entry["holders"] = e.holders;
        j["intersection"].push_back(std::move(entry));
    }
    return j.dump(2);
}

bool IntersectionResult::operator==(const IntersectionResult& o) const {
    if (protocol != o.protocol || n != o.n || t != o.t || entries.size() != o.entries.size())
        return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].element != o.entries[i].element ||
            entries[i].count != o.entries[i].count ||
            entries[i].holders != o.entries[i].holders)
            return false;
    }
    return true;
}

void send_blob(Comm& comm, std::uint8_t to, Phase phase, MsgKind kind,
               std::uint32_t channel, const Bytes& blob) {
    Bytes first;
    first.reserve(8 + std::min(blob.size(), kChunkBytes));
    put_u64(first, blob.size());
    std::size_t off = std::min(blob.size(), kChunkBytes - 8);
    first.insert(first.end(), blob.begin(), blob.begin() + static_cast<std::ptrdiff_t>(off));

    Frame f;
    f.receiver = to;
    f.phase = phase;
    f.kind = kind;
    f.bin = channel;
    f.slot = 0;
    f.payload = std::move(first);
    comm.send(std::move(f));

    std::uint32_t chunk = 1;
    while (off < blob.size()) {
        std::size_t len = std::min(blob.size() - off, kChunkBytes);
        Frame g;
        g.receiver = to;
        g.phase = phase;
        g.kind = kind;
        g.bin = channel;
        g.slot = chunk++;
        g.payload.assign(blob.begin() + static_cast<std::ptrdiff_t>(off),
                         blob.begin() + static_cast<std::ptrdiff_t>(off + len));
        comm.send(std::move(g));
        off += len;
    }
}

Bytes recv_blob(Comm& comm, std::uint8_t from, MsgKind kind, std::uint32_t channel) {
    Frame f = comm.recv(from, kind, channel, 0);
    if (f.payload.size() < 8) throw MalformedFrame("blob header truncated");
    std::uint64_t total = get_u64(f.payload.data());
    if (total > (1u << 30)) throw MalformedFrame("blob too large");
    Bytes blob;
    blob.reserve(total);
    blob.insert(blob.end(), f.payload.begin() + 8, f.payload.end());
    std::uint32_t chunk = 1;
    while (blob.size() < total) {
        Frame g = comm.recv(from, kind, channel, chunk++);
        blob.insert(blob.end(), g.payload.begin(), g.payload.end());
    }
    if (blob.size() != total) throw MalformedFrame("blob length mismatch");
    return blob;
}

void append_record(Bytes& blob, const Bytes& rec) {
    put_u32(blob, static_cast<std::uint32_t>(rec.size()));
    blob.insert(blob.end(), rec.begin(), rec.end());
}

std::vector<Bytes> split_records(const Bytes& blob, std::size_t expected) {
    std::vector<Bytes> recs;
    recs.reserve(expected);
    std::size_t off = 0;
    while (off < blob.size()) {
        if (off + 4 > blob.size()) throw MalformedFrame("record prefix truncated");
        std::uint32_t len = get_u32(blob.data() + off);
        off += 4;
        if (off + len > blob.size()) throw MalformedFrame("record truncated");
        recs.emplace_back(blob.begin() + static_cast<std::ptrdiff_t>(off),
                          blob.begin() + static_cast<std::ptrdiff_t>(off + len));
        off += len;
    }
    if (recs.size() != expected) throw MalformedFrame("record count mismatch");
    return recs;
}

std::uint32_t opprf_instance_tag(const std::array<std::uint8_t, 16>& session_id,
                                 MsgKind kind, std::uint8_t sender, std::uint8_t receiver,
                                 std::uint32_t bin, std::uint32_t channel) {
    std::uint8_t msg[16 + 3 + 8];
    std::memcpy(msg, session_id.data(), 16);
    msg[16] = static_cast<std::uint8_t>(kind);
    msg[17] = sender;
    msg[18] = receiver;
    for (int i = 0; i < 4; ++i) msg[19 + i] = static_cast<std::uint8_t>(bin >> (8 * i));
    for (int i = 0; i < 4; ++i) msg[23 + i] = static_cast<std::uint8_t>(channel >> (8 * i));
    std::uint8_t out[4];
    crypto_generichash(out, sizeof(out), msg, sizeof(msg),
                       reinterpret_cast<const std::uint8_t*>("totpsi.tag"), 10);
    return get_u32(out);
}

void abort_session(Comm& comm, const std::array<std::uint8_t, 16>& session_id) {
    for (int j = 0; j < comm.n(); ++j) {
        if (j == comm.self()) continue;
        try {
            Frame f;
            f.session_id = session_id;
            f.receiver = static_cast<std::uint8_t>(j);
            f.kind = MsgKind::Abort;
            comm.send(std::move(f));
        } catch (const Error&) {
        }
    }
}

ProgrammedPoints bin_points(const std::vector<SimpleEntry>& bin, const std::vector<u128>& ys,
                            std::uint32_t beta, const Modulus& channel_mod, Prg& prg) {
    ProgrammedPoints pts;
    pts.capacity = beta;
    pts.points.reserve(bin.size());
    std::unordered_set<u128, U128Hash> seen;
    for (std::size_t i = 0; i < bin.size(); ++i)
        if (bin[i].real && seen.insert(bin[i].value).second)
            pts.points.emplace_back(bin[i].value, ys[i] % channel_mod.p());
    for (const auto& e : bin) {
        u128 y = prg.uniform(channel_mod); // drawn unconditionally: input-independent
        if (!e.real && seen.insert(e.value).second) pts.points.emplace_back(e.value, y);
    }
    return pts;
}

double thread_cpu_secs() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

// ---------------------------------------------------------------------------
// Setup handshake

namespace {

Bytes encode_setup(const SessionConfig& cfg, std::uint8_t attempt,
                   const std::array<std::uint8_t, 16>& session_id,
                   const Prg::Seed& nonce) {
    Bytes out;
    out.insert(out.end(), session_id.begin(), session_id.end());
    out.push_back(attempt);
    out.push_back(static_cast<std::uint8_t>(cfg.protocol));
    out.push_back(static_cast<std::uint8_t>(cfg.mode));
    out.push_back(static_cast<std::uint8_t>(cfg.n));
    out.push_back(static_cast<std::uint8_t>(cfg.t));
    out.push_back(static_cast<std::uint8_t>(cfg.lambda));
    out.push_back(static_cast<std::uint8_t>(cfg.opprf));
    out.push_back(static_cast<std::uint8_t>(cfg.ole));
    put_u64(out, cfg.m);
    std::uint8_t mod_bytes[16];
    if (cfg.mode == FieldMode::Crt) {
        CrtSystem sys = CrtSystem::make(cfg.crt_primes);
        auto ser = sys.serialize();
        std::memcpy(mod_bytes, ser.data(), 16);
    } else {
        u128_to_le_bytes(cfg.prime, mod_bytes);
    }
    out.insert(out.end(), mod_bytes, mod_bytes + 16);
    out.insert(out.end(), nonce.begin(), nonce.end());
    return out;
}

struct SetupMsg {
    std::array<std::uint8_t, 16> session_id{};
    std::uint8_t attempt = 0;
    Prg::Seed nonce{};
};

SetupMsg decode_setup(const SessionConfig& cfg, const Bytes& payload) {
    if (payload.size() != 16 + 16 + 16 + 32) throw MalformedFrame("setup frame: bad length");
    SetupMsg msg;
    std::memcpy(msg.session_id.data(), payload.data(), 16);
    msg.attempt = payload[16];
    const std::uint8_t* p = payload.data() + 17;
    // every party must hold the identical public parameters
    bool ok = p[0] == static_cast<std::uint8_t>(cfg.protocol) &&
              p[1] == static_cast<std::uint8_t>(cfg.mode) &&
              p[2] == static_cast<std::uint8_t>(cfg.n) &&
              p[3] == static_cast<std::uint8_t>(cfg.t) &&
              p[4] == static_cast<std::uint8_t>(cfg.lambda) &&
              p[5] == static_cast<std::uint8_t>(cfg.opprf) &&
              p[6] == static_cast<std::uint8_t>(cfg.ole) &&
              get_u64(p + 7) == cfg.m;
    if (ok) {
        std::uint8_t mod_bytes[16];
        if (cfg.mode == FieldMode::Crt) {
            auto ser = CrtSystem::make(cfg.crt_primes).serialize();
            std::memcpy(mod_bytes, ser.data(), 16);
        } else {
            u128_to_le_bytes(cfg.prime, mod_bytes);
        }
        ok = std::memcmp(mod_bytes, p + 15, 16) == 0;
    }
    if (!ok) throw ConfigError("session parameters disagree with the leader");
    std::memcpy(msg.nonce.data(), payload.data() + 16 + 16 + 16, 32);
    return msg;
}

bool try_tables(const SessionConfig& cfg, const Prg::Seed& nonce, SessionContext& ctx,
                const std::vector<u128>& set) {
    Modulus mod = cfg.modulus();
    ctx.seeds = HashSeeds::derive(nonce, kCuckooHashCount);
    ctx.params = derive_params(cfg.m, cfg.lambda);
    try {
        ctx.cuckoo = cuckoo_insert_all(set, ctx.seeds, ctx.params, mod,
                                       static_cast<std::uint8_t>(cfg.self));
        ctx.simple = simple_insert_all(set, ctx.seeds, ctx.params, mod,
                                       static_cast<std::uint8_t>(cfg.self));
    } catch (const InsertionFailure&) {
        return false;
    } catch (const BinOverflow&) {
        return false;
    }
    if (!cfg.pad_bins)
        for (auto& bin : ctx.simple.bins)
            bin.erase(std::remove_if(bin.begin(), bin.end(),
                                     [](const SimpleEntry& e) { return !e.real; }),
                      bin.end());
    return true;
}

} // namespace

SessionContext session_setup_leader(const SessionConfig& cfg, Comm& comm,
                                    const std::vector<u128>& set, Prg& prg) {
    cfg.validate();
    if (set.size() > cfg.m) throw ConfigError("set size exceeds the declared m");
    SessionContext ctx;
    prg.fill(ctx.session_id.data(), ctx.session_id.size());
    Prg nonce_prg = prg.child("session.nonce");

    for (int attempt = 0; attempt < kCuckooRetries; ++attempt) {
        Prg::Seed nonce;
        nonce_prg.fill(nonce.data(), nonce.size());
        Bytes setup = encode_setup(cfg, static_cast<std::uint8_t>(attempt), ctx.session_id,
                                   nonce);
        for (int j = 1; j < cfg.n; ++j) {
            Frame f;
            f.session_id = ctx.session_id;
            f.receiver = static_cast<std::uint8_t>(j);
            f.kind = MsgKind::SessionSetup;
            f.bin = static_cast<std::uint32_t>(attempt);
            f.payload = setup;
            comm.send(std::move(f));
        }
        bool ok = try_tables(cfg, nonce, ctx, set);
        for (int j = 1; j < cfg.n; ++j) {
            Frame ack = comm.recv(static_cast<std::uint8_t>(j), MsgKind::SetupAck,
                                  static_cast<std::uint32_t>(attempt), 0);
            if (ack.payload.size() != 1) throw MalformedFrame("setup ack: bad length");
            ok = ok && ack.payload[0] == 1;
        }
        // verdict broadcast: payload 1 = go, 0 = fresh-nonce retry
        for (int j = 1; j < cfg.n; ++j) {
            Frame f;
            f.session_id = ctx.session_id;
            f.receiver = static_cast<std::uint8_t>(j);
            f.kind = ok ? MsgKind::SetupAck : MsgKind::SetupRetry;
            f.bin = static_cast<std::uint32_t>(attempt);
            f.slot = 1;
            f.payload = {static_cast<std::uint8_t>(ok ? 1 : 0)};
            comm.send(std::move(f));
        }
        if (ok) return ctx;
    }
    abort_session(comm, ctx.session_id);
    throw ProtocolAbort("bin layout failed after all seed retries");
}

SessionContext session_setup_client(const SessionConfig& cfg, Comm& comm,
                                    const std::vector<u128>& set) {
    cfg.validate();
    if (set.size() > cfg.m) throw ConfigError("set size exceeds the declared m");
    SessionContext ctx;
    for (int attempt = 0; attempt < kCuckooRetries; ++attempt) {
        Frame f = comm.recv(0, MsgKind::SessionSetup, static_cast<std::uint32_t>(attempt), 0);
        SetupMsg msg = decode_setup(cfg, f.payload);
        ctx.session_id = msg.session_id;
        bool ok = try_tables(cfg, msg.nonce, ctx, set);
        Frame ack;
        ack.session_id = ctx.session_id;
        ack.receiver = 0;
        ack.kind = MsgKind::SetupAck;
        ack.bin = static_cast<std::uint32_t>(attempt);
        ack.payload = {static_cast<std::uint8_t>(ok ? 1 : 0)};
        comm.send(std::move(ack));
        Frame verdict = comm.recv_match([&](const Frame& g) {
            return g.sender == 0 &&
                   (g.kind == MsgKind::SetupAck || g.kind == MsgKind::SetupRetry) &&
                   g.bin == static_cast<std::uint32_t>(attempt) && g.slot == 1;
        });
        if (verdict.kind == MsgKind::SetupAck) return ctx;
    }
    throw ProtocolAbort("bin layout failed after all seed retries");
}

} // namespace totpsi
