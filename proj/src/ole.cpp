#include "totpsi/ole.hpp"

namespace totpsi {

namespace {

constexpr int kMaskBits = 176; // 128-bit quotient + 48-bit statistical slack

void put_u32(Bytes& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

mpz_class random_mask(Prg& prg) {
    std::uint8_t buf[kMaskBits / 8];
    prg.fill(buf, sizeof(buf));
    return mpz_from_bytes(buf, sizeof(buf));
}

} // namespace

OleReceiverSession::OleReceiverSession(OleBackend backend, const Modulus& mod, Prg& prg)
    : backend_(backend), mod_(mod) {
    if (backend == OleBackend::Homomorphic)
        keys_ = std::make_shared<PaillierKeyPair>(paillier_keygen(prg));
}

Bytes OleReceiverSession::request(const std::vector<u128>& xs, Prg& prg) const {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(backend_));
    put_u32(out, static_cast<std::uint32_t>(xs.size()));
    if (backend_ == OleBackend::Ideal) {
        std::uint8_t tmp[16];
        for (u128 x : xs) {
            u128_to_le_bytes(x % mod_.p(), tmp);
            out.insert(out.end(), tmp, tmp + 16);
        }
        return out;
    }
    Bytes pk = keys_->pk.serialize();
    out.insert(out.end(), pk.begin(), pk.end());
    std::size_t ct_len = keys_->pk.ct_bytes();
    put_u32(out, static_cast<std::uint32_t>(ct_len));
    std::vector<std::uint8_t> ct(ct_len);
    for (u128 x : xs) {
        mpz_class c = paillier_encrypt(keys_->pk, mpz_from_u128(x % mod_.p()), prg);
        mpz_to_fixed_bytes(c, ct.data(), ct.size());
        out.insert(out.end(), ct.begin(), ct.end());
    }
    return out;
}

Bytes ole_respond(const Modulus& mod, const Bytes& request, const std::vector<u128>& slopes,
                  const std::vector<u128>& offsets, Prg& prg) {
    if (slopes.size() != offsets.size()) throw LengthMismatch("ole: slopes vs offsets");
    if (request.size() < 5) throw MalformedFrame("ole request too short");
    auto backend = static_cast<OleBackend>(request[0]);
    std::uint32_t count = get_u32(request.data() + 1);
    if (count != slopes.size()) throw LengthMismatch("ole: request count vs sender inputs");

    Bytes out;
    out.push_back(request[0]);
    put_u32(out, count);

    if (backend == OleBackend::Ideal) {
        if (request.size() != 5 + static_cast<std::size_t>(count) * 16)
            throw MalformedFrame("ole request length mismatch");
        std::uint8_t tmp[16];
        for (std::uint32_t i = 0; i < count; ++i) {
            u128 x = u128_from_le_bytes(request.data() + 5 + static_cast<std::size_t>(i) * 16);
            u128 y = mod.add(mod.mul(slopes[i] % mod.p(), x), offsets[i] % mod.p());
            u128_to_le_bytes(y, tmp);
            out.insert(out.end(), tmp, tmp + 16);
        }
        return out;
    }
    if (backend != OleBackend::Homomorphic) throw MalformedFrame("unknown ole backend tag");

    if (request.size() < 7) throw MalformedFrame("ole request too short");
    std::size_t nlen = request[5] | (static_cast<std::size_t>(request[6]) << 8);
    if (request.size() < 5 + 2 + nlen + 4) throw MalformedFrame("ole request truncated");
    PaillierPublicKey pk = PaillierPublicKey::deserialize(request.data() + 5, 2 + nlen);
    std::size_t off = 5 + 2 + nlen;
    std::uint32_t ct_len = get_u32(request.data() + off);
    off += 4;
    if (ct_len != pk.ct_bytes()) throw MalformedFrame("ole ciphertext length mismatch");
    if (request.size() != off + static_cast<std::size_t>(count) * ct_len)
        throw MalformedFrame("ole request length mismatch");

    mpz_class p = mpz_from_u128(mod.p());
    std::vector<std::uint8_t> ct(ct_len);
    for (std::uint32_t i = 0; i < count; ++i) {
        mpz_class cx = mpz_from_bytes(request.data() + off + static_cast<std::size_t>(i) * ct_len,
                                      ct_len);
        if (cx >= pk.n2) throw MalformedFrame("ole ciphertext out of range");
        mpz_class a = mpz_from_u128(slopes[i] % mod.p());
        mpz_class b = mpz_from_u128(offsets[i] % mod.p());
        // Enc(a*x + b + mask*p): the mask statistically hides a and b beyond
        // the mod-p result.
        mpz_class add = b + random_mask(prg) * p;
        mpz_class cy = paillier_scale_add(pk, cx, a, add, prg);
        mpz_to_fixed_bytes(cy, ct.data(), ct.size());
        out.insert(out.end(), ct.begin(), ct.end());
    }
    return out;
}

std::vector<u128> OleReceiverSession::finish(const Bytes& response) const {
    if (response.size() < 5) throw MalformedFrame("ole response too short");
    if (response[0] != static_cast<std::uint8_t>(backend_))
        throw MalformedFrame("ole response backend mismatch");
    std::uint32_t count = get_u32(response.data() + 1);
    std::vector<u128> ys;
    ys.reserve(count);
    if (backend_ == OleBackend::Ideal) {
        if (response.size() != 5 + static_cast<std::size_t>(count) * 16)
            throw MalformedFrame("ole response length mismatch");
        for (std::uint32_t i = 0; i < count; ++i)
            ys.push_back(u128_from_le_bytes(response.data() + 5 + static_cast<std::size_t>(i) * 16) %
                         mod_.p());
        return ys;
    }
    std::size_t ct_len = keys_->pk.ct_bytes();
    if (response.size() != 5 + static_cast<std::size_t>(count) * ct_len)
        throw MalformedFrame("ole response length mismatch");
    mpz_class p = mpz_from_u128(mod_.p());
    for (std::uint32_t i = 0; i < count; ++i) {
        mpz_class ct = mpz_from_bytes(response.data() + 5 + static_cast<std::size_t>(i) * ct_len,
                                      ct_len);
        mpz_class m = paillier_decrypt(*keys_, ct) % p;
        ys.push_back(u128_from_mpz(m));
    }
    return ys;
}

u128 ole_eval(OleBackend backend, const Modulus& mod, const OleSenderInput& sender, u128 x,
              Prg& prg) {
    OleBatch batch{{sender.a}, {sender.b}, {x}};
    return ole_batch(backend, mod, batch, prg).at(0);
}

std::vector<u128> ole_batch(OleBackend backend, const Modulus& mod, const OleBatch& batch,
                            Prg& prg) {
    if (batch.slopes.size() != batch.offsets.size() ||
        batch.slopes.size() != batch.inputs.size())
        throw LengthMismatch("ole batch: unequal lengths");
    OleReceiverSession receiver(backend, mod, prg);
    Bytes req = receiver.request(batch.inputs, prg);
    Bytes resp = ole_respond(mod, req, batch.slopes, batch.offsets, prg);
    return receiver.finish(resp);
}

} // namespace totpsi
