#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "totpsi/errors.hpp"

namespace totpsi {

using u128 = unsigned __int128;

struct U128Hash {
    std::size_t operator()(u128 v) const {
        return static_cast<std::size_t>((v ^ (v >> 64)) * 0x9e3779b97f4a7c15ULL);
    }
};

// Largest prime below 2^128.
inline constexpr u128 kDefaultPrime = ~u128{0} - 158; // 2^128 - 159

// Four largest 32-bit primes, used as CRT moduli in packed mode.
inline constexpr std::array<std::uint32_t, 4> kDefaultCrtPrimes = {
    4294967291u, 4294967279u, 4294967231u, 4294967197u};

u128 u128_from_le_bytes(const std::uint8_t* b);
void u128_to_le_bytes(u128 v, std::uint8_t* b);
std::string u128_to_hex(u128 v); // 32 hex digits, big-endian, no prefix
u128 u128_from_hex(const std::string& s);

// a*b as a 256-bit (hi, lo) pair.
void mul_wide(u128 a, u128 b, u128& hi, u128& lo);

// Chinese-remainder system over four 32-bit primes.
struct CrtSystem {
    std::array<std::uint32_t, 4> primes;
    u128 product;

    static CrtSystem make(const std::array<std::uint32_t, 4>& primes);
    static CrtSystem defaults() { return make(kDefaultCrtPrimes); }

    std::array<std::uint32_t, 4> decompose(u128 a) const;
    u128 recombine(const std::array<std::uint32_t, 4>& residues) const;

    std::array<std::uint8_t, 16> serialize() const;
    static CrtSystem deserialize(const std::uint8_t* b);

  private:
    // Garner mixed-radix constants, precomputed in make().
    std::array<std::uint64_t, 4> inv_;
};

// Modular arithmetic context. Either a prime modulus or the product of a
// CrtSystem (a ring; inverses go through the per-prime residues).
class Modulus {
  public:
    explicit Modulus(u128 prime);
    static Modulus default_prime() { return Modulus(kDefaultPrime); }
    static Modulus from_crt(const CrtSystem& sys);

    u128 p() const { return p_; }
    bool is_crt() const { return crt_.has_value(); }
    const CrtSystem& crt() const { return *crt_; }

    u128 add(u128 a, u128 b) const;
    u128 sub(u128 a, u128 b) const;
    u128 mul(u128 a, u128 b) const;
    u128 neg(u128 a) const { return a == 0 ? 0 : p_ - a; }
    u128 pow(u128 base, u128 exp) const;
    u128 inv(u128 a) const; // throws ZeroInverse

    // 16 LE bytes -> element; rejects values >= p.
    u128 reduce_element(const std::uint8_t* bytes16) const;
    // Arbitrary bytes -> element via a domain-separated hash (pre-hash
    // ingestion mode; changes the element universe).
    u128 hash_to_element(const void* data, std::size_t len) const;

    bool operator==(const Modulus& o) const { return p_ == o.p_; }

  private:
    enum class Kind { Special128, Fits64, Generic };
    u128 p_;
    Kind kind_;
    std::optional<CrtSystem> crt_;
};

} // namespace totpsi
