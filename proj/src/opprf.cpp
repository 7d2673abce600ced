#include "totpsi/opprf.hpp"

#include <algorithm>
#include <cstring>
#include <sodium.h>
#include <unordered_set>

namespace totpsi {

namespace {

constexpr std::size_t kIdealRecord = 1 + 16 + 16;

void put_u16(Bytes& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(Bytes& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
void put_u128(Bytes& b, u128 v) {
    std::uint8_t tmp[16];
    u128_to_le_bytes(v, tmp);
    b.insert(b.end(), tmp, tmp + 16);
}

u128 ideal_prf(const std::uint8_t* key32, u128 x, std::uint32_t session, const Modulus& m) {
    std::uint8_t msg[20];
    u128_to_le_bytes(x, msg);
    for (int i = 0; i < 4; ++i) msg[16 + i] = static_cast<std::uint8_t>(session >> (8 * i));
    std::uint8_t out[16];
    crypto_generichash(out, sizeof(out), msg, sizeof(msg), key32, 32);
    return u128_from_le_bytes(out) % m.p();
}

std::uint32_t table_slot(const GroupElement& w, const std::uint8_t* nonce16,
                         std::uint32_t table_len) {
    std::uint8_t msg[32 + 16 + 1];
    std::memcpy(msg, w.data(), 32);
    std::memcpy(msg + 32, nonce16, 16);
    msg[48] = 'i';
    std::uint8_t out[8];
    crypto_generichash(out, sizeof(out), msg, sizeof(msg), nullptr, 0);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | out[i];
    return static_cast<std::uint32_t>(v % table_len);
}

u128 table_mask(const GroupElement& w, const std::uint8_t* nonce16, const Modulus& m) {
    std::uint8_t msg[32 + 16 + 1];
    std::memcpy(msg, w.data(), 32);
    std::memcpy(msg + 32, nonce16, 16);
    msg[48] = 'm';
    std::uint8_t out[16];
    crypto_generichash(out, sizeof(out), msg, sizeof(msg), nullptr, 0);
    return u128_from_le_bytes(out) % m.p();
}

} // namespace

std::uint32_t opprf_table_size(std::uint32_t capacity) {
    std::uint32_t need = std::max(capacity + 1, 2 * capacity);
    std::uint32_t t = 1;
    while (t < need) t <<= 1;
    return t;
}

OpprfProgram OpprfProgram::make(OpprfBackend backend, const Modulus& value_mod,
                                const ProgrammedPoints& points, std::uint32_t session,
                                Prg& prg) {
    if (points.points.size() > points.capacity)
        throw CapacityExceeded("more programmed points than capacity");
    {
        std::unordered_set<u128, U128Hash> seen;
        for (const auto& [x, y] : points.points)
            if (!seen.insert(x).second) throw DuplicateX("duplicate programmed x");
    }
    OpprfProgram p;
    p.backend_ = backend;
    p.value_mod_ = value_mod;
    p.session_ = session;

    if (backend == OpprfBackend::Ideal) {
        Bytes& h = p.ideal_hint_;
        h.push_back(static_cast<std::uint8_t>(OpprfBackend::Ideal));
        put_u32(h, session);
        put_u16(h, static_cast<std::uint16_t>(points.capacity));
        std::uint8_t key[32];
        prg.fill(key, sizeof(key));
        h.insert(h.end(), key, key + 32);
        for (const auto& [x, y] : points.points) {
            h.push_back(1);
            put_u128(h, x);
            put_u128(h, y % value_mod.p());
        }
        for (std::size_t i = points.points.size(); i < points.capacity; ++i) {
            h.push_back(0);
            put_u128(h, prg.next_u128());
            put_u128(h, prg.next_u128());
        }
        return p;
    }

    // Table backend.
    p.oprf_key_ = oprf_keygen(prg);
    const std::uint32_t table_len = opprf_table_size(points.capacity);
    std::vector<GroupElement> ws;
    ws.reserve(points.points.size());
    for (const auto& [x, y] : points.points) ws.push_back(oprf_eval(p.oprf_key_, x));

    std::uint8_t nonce[16];
    std::vector<std::uint32_t> slots(points.points.size());
    bool placed = false;
    // success per nonce is ~exp(-u^2 / 2L); the expected retry count stays
    // small but the tail needs a generous bound to keep whole-session failure
    // negligible across thousands of bins
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        prg.fill(nonce, sizeof(nonce));
        std::vector<bool> used(table_len, false);
        placed = true;
        for (std::size_t j = 0; j < ws.size(); ++j) {
            std::uint32_t s = table_slot(ws[j], nonce, table_len);
            if (used[s]) {
                placed = false;
                break;
            }
            used[s] = true;
            slots[j] = s;
        }
    }
    if (!placed) throw BackendFailure("opprf table: slot collisions persisted");

    std::vector<u128> table(table_len);
    for (auto& e : table) e = prg.uniform(value_mod);
    for (std::size_t j = 0; j < ws.size(); ++j)
        table[slots[j]] =
            value_mod.add(points.points[j].second % value_mod.p(), table_mask(ws[j], nonce, value_mod));

    Bytes& h = p.table_hint_;
    h.push_back(static_cast<std::uint8_t>(OpprfBackend::Table));
    put_u32(h, session);
    put_u16(h, static_cast<std::uint16_t>(table_len));
    h.insert(h.end(), nonce, nonce + 16);
    for (u128 e : table) put_u128(h, e);
    return p;
}

Bytes OpprfProgram::respond(const Bytes& request) const {
    if (backend_ == OpprfBackend::Ideal) {
        if (!request.empty()) throw MalformedFrame("ideal opprf expects empty request");
        return ideal_hint_;
    }
    if (request.size() != 32) throw MalformedFrame("table opprf expects a 32-byte blinded point");
    GroupElement blinded;
    std::memcpy(blinded.data(), request.data(), 32);
    GroupElement resp = oprf_respond(oprf_key_, blinded);
    Bytes out(resp.begin(), resp.end());
    out.insert(out.end(), table_hint_.begin(), table_hint_.end());
    return out;
}

OpprfQuery OpprfQuery::start(OpprfBackend backend, const Modulus& value_mod, u128 q,
                             std::uint32_t session, Prg& prg) {
    OpprfQuery s;
    s.backend_ = backend;
    s.value_mod_ = value_mod;
    s.session_ = session;
    s.q_ = q;
    if (backend == OpprfBackend::Table) s.blinded_ = oprf_blind(q, prg);
    return s;
}

Bytes OpprfQuery::request() const {
    if (backend_ == OpprfBackend::Ideal) return {};
    return Bytes(blinded_.point.begin(), blinded_.point.end());
}

u128 OpprfQuery::finish(const Bytes& response) const {
    if (backend_ == OpprfBackend::Ideal) {
        if (response.size() < 1 + 4 + 2 + 32) throw MalformedFrame("ideal hint too short");
        const std::uint8_t* d = response.data();
        if (d[0] != static_cast<std::uint8_t>(OpprfBackend::Ideal))
            throw SessionMismatch("hint backend tag mismatch");
        if (get_u32(d + 1) != session_) throw SessionMismatch("hint from another session");
        std::uint32_t cap = get_u16(d + 5);
        if (response.size() != 1 + 4 + 2 + 32 + cap * kIdealRecord)
            throw MalformedFrame("ideal hint length mismatch");
        const std::uint8_t* key = d + 7;
        const std::uint8_t* rec = d + 39;
        for (std::uint32_t i = 0; i < cap; ++i, rec += kIdealRecord) {
            if (rec[0] != 1) continue;
            if (u128_from_le_bytes(rec + 1) == q_) return u128_from_le_bytes(rec + 17);
        }
        return ideal_prf(key, q_, session_, value_mod_);
    }

    if (response.size() < 32 + 1 + 4 + 2 + 16) throw MalformedFrame("table hint too short");
    GroupElement resp;
    std::memcpy(resp.data(), response.data(), 32);
    GroupElement w = oprf_unblind(blinded_, resp);
    const std::uint8_t* d = response.data() + 32;
    if (d[0] != static_cast<std::uint8_t>(OpprfBackend::Table))
        throw SessionMismatch("hint backend tag mismatch");
    if (get_u32(d + 1) != session_) throw SessionMismatch("hint from another session");
    std::uint32_t table_len = get_u16(d + 5);
    if (response.size() != 32 + 1 + 4 + 2 + 16 + static_cast<std::size_t>(table_len) * 16)
        throw MalformedFrame("table hint length mismatch");
    const std::uint8_t* nonce = d + 7;
    const std::uint8_t* entries = d + 23;
    std::uint32_t slot = table_slot(w, nonce, table_len);
    u128 entry = u128_from_le_bytes(entries + static_cast<std::size_t>(slot) * 16);
    return value_mod_.sub(entry % value_mod_.p(), table_mask(w, nonce, value_mod_));
}

} // namespace totpsi
