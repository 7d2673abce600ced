#pragma once

#include <cstdint>
#include <gmpxx.h>
#include <vector>

#include "totpsi/field.hpp"
#include "totpsi/rng.hpp"

namespace totpsi {

// Textbook Paillier, used as the additively homomorphic backend behind OLE.
// Plaintext space Z_n with n of kPaillierBits; large enough to hold
// a*x + b + mask*p for 128-bit field values without wraparound.
inline constexpr int kPaillierBits = 1024;

struct PaillierPublicKey {
    mpz_class n;
    mpz_class n2;
    std::size_t ct_bytes() const; // fixed ciphertext encoding length

    std::vector<std::uint8_t> serialize() const;
    static PaillierPublicKey deserialize(const std::uint8_t* data, std::size_t len);
};

struct PaillierKeyPair {
    PaillierPublicKey pk;
    mpz_class lambda; // lcm(p-1, q-1)
    mpz_class mu;     // (L(g^lambda mod n^2))^-1 mod n
};

PaillierKeyPair paillier_keygen(Prg& prg, int bits = kPaillierBits);

mpz_class paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m, Prg& prg);
mpz_class paillier_decrypt(const PaillierKeyPair& kp, const mpz_class& ct);

// ct^k * Enc(add), i.e. Enc(k*m + add), rerandomized.
mpz_class paillier_scale_add(const PaillierPublicKey& pk, const mpz_class& ct,
                             const mpz_class& k, const mpz_class& add, Prg& prg);

mpz_class mpz_from_u128(u128 v);
u128 u128_from_mpz(const mpz_class& v); // v must fit 128 bits

void mpz_to_fixed_bytes(const mpz_class& v, std::uint8_t* out, std::size_t len);
mpz_class mpz_from_bytes(const std::uint8_t* data, std::size_t len);

} // namespace totpsi
