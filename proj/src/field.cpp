#include "totpsi/field.hpp"

#include <sodium.h>

namespace totpsi {

u128 u128_from_le_bytes(const std::uint8_t* b) {
    u128 v = 0;
    for (int i = 15; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

void u128_to_le_bytes(u128 v, std::uint8_t* b) {
    for (int i = 0; i < 16; ++i) {
        b[i] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
}

std::string u128_to_hex(u128 v) {
    static const char* digits = "0123456789abcdef";
    std::string s(32, '0');
    for (int i = 31; i >= 0; --i) {
        s[i] = digits[static_cast<unsigned>(v & 0xf)];
        v >>= 4;
    }
    return s;
}

u128 u128_from_hex(const std::string& s) {
    std::string body = s;
    if (body.rfind("0x", 0) == 0 || body.rfind("0X", 0) == 0) body = body.substr(2);
    if (body.empty() || body.size() > 32) throw OutOfRange("hex literal must be 1..32 digits");
    u128 v = 0;
    for (char c : body) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else throw OutOfRange("invalid hex digit");
        v = (v << 4) | static_cast<unsigned>(d);
    }
    return v;
}

void mul_wide(u128 a, u128 b, u128& hi, u128& lo) {
    const u128 mask = (u128{1} << 64) - 1;
    u128 a0 = a & mask, a1 = a >> 64;
    u128 b0 = b & mask, b1 = b >> 64;
    u128 ll = a0 * b0;
    u128 lh = a0 * b1;
    u128 hl = a1 * b0;
    u128 hh = a1 * b1;
    u128 mid = (ll >> 64) + (lh & mask) + (hl & mask);
    lo = (ll & mask) | (mid << 64);
    hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
}

namespace {

std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>((static_cast<u128>(a) * b) % m);
}

std::uint64_t powmod64(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) r = mulmod64(r, base, m);
        base = mulmod64(base, base, m);
        exp >>= 1;
    }
    return r;
}

// Reduce a 256-bit value (hi, lo) modulo p = 2^128 - 159 using
// 2^128 = 159 (mod p).
u128 reduce_special(u128 hi, u128 lo) {
    while (hi != 0) {
        u128 h2, l2;
        mul_wide(hi, 159, h2, l2);
        u128 nl = lo + l2;
        hi = h2 + (nl < lo ? 1 : 0);
        lo = nl;
    }
    while (lo >= kDefaultPrime) lo -= kDefaultPrime;
    return lo;
}

} // namespace

CrtSystem CrtSystem::make(const std::array<std::uint32_t, 4>& primes) {
    CrtSystem sys;
    sys.primes = primes;
    sys.product = 1;
    for (auto p : primes) sys.product *= p;
    // Garner constants: inv_[k] = (p_0*...*p_{k-1})^{-1} mod p_k.
    sys.inv_[0] = 0;
    for (int k = 1; k < 4; ++k) {
        std::uint64_t pk = primes[static_cast<std::size_t>(k)];
        std::uint64_t prefix = 1;
        for (int j = 0; j < k; ++j)
            prefix = mulmod64(prefix, primes[static_cast<std::size_t>(j)] % pk, pk);
        sys.inv_[static_cast<std::size_t>(k)] = powmod64(prefix, pk - 2, pk);
    }
    return sys;
}

std::array<std::uint32_t, 4> CrtSystem::decompose(u128 a) const {
    if (a >= product) throw OutOfRange("crt_decompose: value >= product of primes");
    std::array<std::uint32_t, 4> r;
    for (int i = 0; i < 4; ++i)
        r[static_cast<std::size_t>(i)] =
            static_cast<std::uint32_t>(a % primes[static_cast<std::size_t>(i)]);
    return r;
}

u128 CrtSystem::recombine(const std::array<std::uint32_t, 4>& residues) const {
    for (int i = 0; i < 4; ++i)
        if (residues[static_cast<std::size_t>(i)] >= primes[static_cast<std::size_t>(i)])
            throw OutOfRange("crt_recombine: residue >= its prime");
    // Garner mixed-radix digits v_k.
    std::uint64_t v[4];
    v[0] = residues[0];
    for (int k = 1; k < 4; ++k) {
        std::uint64_t pk = primes[static_cast<std::size_t>(k)];
        // value of the partial sum v0 + v1 p0 + ... mod pk
        std::uint64_t partial = 0;
        std::uint64_t radix = 1;
        for (int j = 0; j < k; ++j) {
            partial = (partial + mulmod64(v[j] % pk, radix, pk)) % pk;
            radix = mulmod64(radix, primes[static_cast<std::size_t>(j)] % pk, pk);
        }
        std::uint64_t diff = (residues[static_cast<std::size_t>(k)] % pk + pk - partial) % pk;
        v[k] = mulmod64(diff, inv_[static_cast<std::size_t>(k)], pk);
    }
    u128 x = v[3];
    x = x * primes[2] + v[2];
    x = x * primes[1] + v[1];
    x = x * primes[0] + v[0];
    return x;
}

std::array<std::uint8_t, 16> CrtSystem::serialize() const {
    std::array<std::uint8_t, 16> out;
    for (int i = 0; i < 4; ++i) {
        std::uint32_t p = primes[static_cast<std::size_t>(i)];
        for (int j = 0; j < 4; ++j) {
            out[static_cast<std::size_t>(i * 4 + j)] = static_cast<std::uint8_t>(p & 0xff);
            p >>= 8;
        }
    }
    return out;
}

CrtSystem CrtSystem::deserialize(const std::uint8_t* b) {
    std::array<std::uint32_t, 4> primes;
    for (int i = 0; i < 4; ++i) {
        std::uint32_t p = 0;
        for (int j = 3; j >= 0; --j) p = (p << 8) | b[i * 4 + j];
        primes[static_cast<std::size_t>(i)] = p;
    }
    return make(primes);
}

Modulus::Modulus(u128 prime) : p_(prime) {
    if (prime < 2) throw OutOfRange("modulus must be >= 2");
    if (prime == kDefaultPrime) kind_ = Kind::Special128;
    else if (prime <= ~std::uint64_t{0}) kind_ = Kind::Fits64;
    else kind_ = Kind::Generic;
}

Modulus Modulus::from_crt(const CrtSystem& sys) {
    Modulus m(sys.product);
    m.crt_ = sys;
    return m;
}

u128 Modulus::add(u128 a, u128 b) const {
    // a, b < p < 2^128; the sum can wrap the 128-bit register.
    u128 s = a + b;
    if (s < a || s >= p_) s -= p_;
    return s;
}

u128 Modulus::sub(u128 a, u128 b) const {
    return a >= b ? a - b : a + (p_ - b);
}

u128 Modulus::mul(u128 a, u128 b) const {
    switch (kind_) {
    case Kind::Special128: {
        u128 hi, lo;
        mul_wide(a, b, hi, lo);
        return reduce_special(hi, lo);
    }
    case Kind::Fits64:
        return (a % p_) * (b % p_) % p_;
    case Kind::Generic:
        break;
    }
    if (crt_) {
        auto ra = crt_->decompose(a % p_);
        auto rb = crt_->decompose(b % p_);
        std::array<std::uint32_t, 4> rc;
        for (int i = 0; i < 4; ++i) {
            auto idx = static_cast<std::size_t>(i);
            rc[idx] = static_cast<std::uint32_t>(
                mulmod64(ra[idx], rb[idx], crt_->primes[idx]));
        }
        return crt_->recombine(rc);
    }
    // Shift-and-add fallback for arbitrary 128-bit moduli.
    u128 acc = 0;
    u128 x = a % p_;
    u128 y = b % p_;
    while (y) {
        if (y & 1) acc = add(acc, x);
        x = add(x, x);
        y >>= 1;
    }
    return acc;
}

u128 Modulus::pow(u128 base, u128 exp) const {
    u128 r = 1 % p_;
    base %= p_;
    while (exp) {
        if (exp & 1) r = mul(r, base);
        base = mul(base, base);
        exp >>= 1;
    }
    return r;
}

u128 Modulus::inv(u128 a) const {
    a %= p_;
    if (a == 0) throw ZeroInverse();
    if (crt_) {
        auto r = crt_->decompose(a);
        std::array<std::uint32_t, 4> out;
        for (int i = 0; i < 4; ++i) {
            auto idx = static_cast<std::size_t>(i);
            if (r[idx] == 0) throw ZeroInverse();
            std::uint64_t pi = crt_->primes[idx];
            out[idx] = static_cast<std::uint32_t>(powmod64(r[idx], pi - 2, pi));
        }
        return crt_->recombine(out);
    }
    return pow(a, p_ - 2); // p_ prime
}

u128 Modulus::reduce_element(const std::uint8_t* bytes16) const {
    u128 v = u128_from_le_bytes(bytes16);
    if (v >= p_) throw OutOfRange("element >= modulus");
    return v;
}

u128 Modulus::hash_to_element(const void* data, std::size_t len) const {
    static const unsigned char key[crypto_generichash_KEYBYTES] = {'t', 'o', 't', 'p', 's',
                                                                   'i', '.', 'e', 'l', 'e',
                                                                   'm', '.', 'v', '1'};
    std::uint8_t out[16];
    crypto_generichash(out, sizeof(out), static_cast<const unsigned char*>(data), len, key,
                       sizeof(key));
    return u128_from_le_bytes(out) % p_;
}

} // namespace totpsi
