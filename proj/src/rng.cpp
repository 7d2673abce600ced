#include "totpsi/rng.hpp"

#include <cstring>
#include <sodium.h>

namespace totpsi {

Prg::Prg(const Seed& seed) : key_(seed) {
    if (sodium_init() < 0) throw Error("libsodium init failed");
}

Prg::Prg(std::uint64_t seed) {
    if (sodium_init() < 0) throw Error("libsodium init failed");
    std::uint8_t le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    crypto_generichash(key_.data(), key_.size(), le, sizeof(le), nullptr, 0);
}

Prg::Seed Prg::random_seed() {
    if (sodium_init() < 0) throw Error("libsodium init failed");
    Seed s;
    randombytes_buf(s.data(), s.size());
    return s;
}

void Prg::refill() {
    std::uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
    for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>(block_ >> (8 * i));
    ++block_;
    crypto_stream_chacha20(buf_.data(), buf_.size(), nonce, key_.data());
    pos_ = 0;
}

void Prg::fill(void* out, std::size_t len) {
    auto* dst = static_cast<std::uint8_t*>(out);
    while (len > 0) {
        if (pos_ == buf_.size()) refill();
        std::size_t take = std::min(len, buf_.size() - pos_);
        std::memcpy(dst, buf_.data() + pos_, take);
        pos_ += take;
        dst += take;
        len -= take;
    }
}

std::uint64_t Prg::next_u64() {
    std::uint64_t v;
    fill(&v, sizeof(v));
    return v;
}

u128 Prg::next_u128() {
    std::uint8_t b[16];
    fill(b, sizeof(b));
    return u128_from_le_bytes(b);
}

u128 Prg::uniform(const Modulus& m) {
    const u128 p = m.p();
    // Rejection sampling over [0, 2^128); the default prime makes the
    // rejection probability ~2^-121.
    const u128 limit = (~u128{0}) - ((~u128{0}) % p + 1) % p;
    for (;;) {
        u128 v = next_u128();
        if (v <= limit) return v % p;
    }
}

std::uint64_t Prg::uniform_u64(std::uint64_t bound) {
    if (bound == 0) throw OutOfRange("uniform_u64: zero bound");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    for (;;) {
        std::uint64_t v = next_u64();
        if (v <= limit) return v % bound;
    }
}

Prg Prg::child(const std::string& label) const {
    Seed out;
    crypto_generichash(out.data(), out.size(),
                       reinterpret_cast<const unsigned char*>(label.data()), label.size(),
                       key_.data(), key_.size());
    return Prg(out);
}

} // namespace totpsi
