#include "totpsi/paillier.hpp"

#include <cstring>

namespace totpsi {

namespace {

mpz_class random_bits(Prg& prg, int bits) {
    std::size_t bytes = static_cast<std::size_t>((bits + 7) / 8);
    std::vector<std::uint8_t> buf(bytes);
    prg.fill(buf.data(), buf.size());
    mpz_class v = mpz_from_bytes(buf.data(), buf.size());
    // trim to the exact bit count
    mpz_class mask = (mpz_class(1) << bits) - 1;
    return v & mask;
}

mpz_class random_below(Prg& prg, const mpz_class& bound) {
    int bits = static_cast<int>(mpz_sizeinbase(bound.get_mpz_t(), 2));
    for (;;) {
        mpz_class v = random_bits(prg, bits);
        if (v < bound) return v;
    }
}

mpz_class random_prime(Prg& prg, int bits) {
    mpz_class candidate = random_bits(prg, bits);
    mpz_setbit(candidate.get_mpz_t(), static_cast<mp_bitcnt_t>(bits - 1));
    mpz_class p;
    mpz_nextprime(p.get_mpz_t(), candidate.get_mpz_t());
    return p;
}

} // namespace

mpz_class mpz_from_u128(u128 v) {
    std::uint8_t b[16];
    u128_to_le_bytes(v, b);
    mpz_class out;
    mpz_import(out.get_mpz_t(), 16, -1, 1, 0, 0, b);
    return out;
}

u128 u128_from_mpz(const mpz_class& v) {
    if (mpz_sizeinbase(v.get_mpz_t(), 2) > 128 || v < 0)
        throw OutOfRange("mpz value does not fit u128");
    std::uint8_t b[16] = {0};
    std::size_t count = 0;
    mpz_export(b, &count, -1, 1, 0, 0, v.get_mpz_t());
    return u128_from_le_bytes(b);
}

void mpz_to_fixed_bytes(const mpz_class& v, std::uint8_t* out, std::size_t len) {
    std::memset(out, 0, len);
    std::size_t count = 0;
    mpz_export(out, &count, -1, 1, 0, 0, v.get_mpz_t());
    if (count > len) throw LengthMismatch("mpz value exceeds fixed encoding");
}

mpz_class mpz_from_bytes(const std::uint8_t* data, std::size_t len) {
    mpz_class out;
    mpz_import(out.get_mpz_t(), len, -1, 1, 0, 0, data);
    return out;
}

std::size_t PaillierPublicKey::ct_bytes() const {
    return (mpz_sizeinbase(n2.get_mpz_t(), 2) + 7) / 8;
}

std::vector<std::uint8_t> PaillierPublicKey::serialize() const {
    std::size_t len = (mpz_sizeinbase(n.get_mpz_t(), 2) + 7) / 8;
    std::vector<std::uint8_t> out(2 + len);
    out[0] = static_cast<std::uint8_t>(len & 0xff);
    out[1] = static_cast<std::uint8_t>(len >> 8);
    mpz_to_fixed_bytes(n, out.data() + 2, len);
    return out;
}

PaillierPublicKey PaillierPublicKey::deserialize(const std::uint8_t* data, std::size_t len) {
    if (len < 2) throw MalformedFrame("paillier key: truncated");
    std::size_t nlen = data[0] | (static_cast<std::size_t>(data[1]) << 8);
    if (len != 2 + nlen) throw MalformedFrame("paillier key: bad length");
    PaillierPublicKey pk;
    pk.n = mpz_from_bytes(data + 2, nlen);
    if (pk.n < 3) throw MalformedFrame("paillier key: invalid modulus");
    pk.n2 = pk.n * pk.n;
    return pk;
}

PaillierKeyPair paillier_keygen(Prg& prg, int bits) {
    for (;;) {
        mpz_class p = random_prime(prg, bits / 2);
        mpz_class q = random_prime(prg, bits / 2);
        if (p == q) continue;
        PaillierKeyPair kp;
        kp.pk.n = p * q;
        kp.pk.n2 = kp.pk.n * kp.pk.n;
        mpz_class pm1 = p - 1, qm1 = q - 1;
        mpz_lcm(kp.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
        // g = n + 1, so L(g^lambda mod n^2) = lambda mod n and mu = lambda^-1.
        if (mpz_invert(kp.mu.get_mpz_t(), kp.lambda.get_mpz_t(), kp.pk.n.get_mpz_t()) == 0)
            continue;
        return kp;
    }
}

mpz_class paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m, Prg& prg) {
    if (m < 0 || m >= pk.n) throw OutOfRange("paillier plaintext out of range");
    mpz_class r = random_below(prg, pk.n);
    while (gcd(r, pk.n) != 1) r = random_below(prg, pk.n);
    // (1 + n)^m = 1 + n*m mod n^2
    mpz_class gm = (1 + pk.n * m) % pk.n2;
    mpz_class rn;
    mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), pk.n2.get_mpz_t());
    return (gm * rn) % pk.n2;
}

mpz_class paillier_decrypt(const PaillierKeyPair& kp, const mpz_class& ct) {
    if (ct < 0 || ct >= kp.pk.n2) throw MalformedFrame("paillier ciphertext out of range");
    mpz_class u;
    mpz_powm(u.get_mpz_t(), ct.get_mpz_t(), kp.lambda.get_mpz_t(), kp.pk.n2.get_mpz_t());
    mpz_class l = (u - 1) / kp.pk.n;
    return (l * kp.mu) % kp.pk.n;
}

mpz_class paillier_scale_add(const PaillierPublicKey& pk, const mpz_class& ct,
                             const mpz_class& k, const mpz_class& add, Prg& prg) {
    mpz_class scaled;
    mpz_powm(scaled.get_mpz_t(), ct.get_mpz_t(), k.get_mpz_t(), pk.n2.get_mpz_t());
    mpz_class enc_add = paillier_encrypt(pk, add % pk.n, prg);
    return (scaled * enc_add) % pk.n2;
}

} // namespace totpsi
