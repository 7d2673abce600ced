#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>
#include <set>

#include "totpsi/field.hpp"
#include "totpsi/rng.hpp"

using namespace totpsi;

namespace {

mpz_class to_mpz(u128 v) {
    std::uint8_t b[16];
    u128_to_le_bytes(v, b);
    mpz_class out;
    mpz_import(out.get_mpz_t(), 16, -1, 1, 0, 0, b);
    return out;
}

u128 from_mpz(const mpz_class& v) {
    std::uint8_t b[16] = {0};
    std::size_t count = 0;
    mpz_export(b, &count, -1, 1, 0, 0, v.get_mpz_t());
    REQUIRE(count <= 16);
    return u128_from_le_bytes(b);
}

} // namespace

TEST_CASE("default prime is the largest prime below 2^128") {
    mpz_class two128 = mpz_class(1) << 128;
    mpz_class p = to_mpz(kDefaultPrime);
    CHECK(p == two128 - 159);
    CHECK(mpz_probab_prime_p(p.get_mpz_t(), 40) != 0);
    // everything strictly between p and 2^128 is composite
    for (mpz_class c = p + 1; c < two128; ++c)
        CHECK(mpz_probab_prime_p(c.get_mpz_t(), 40) == 0);
}

TEST_CASE("crt moduli are the four largest 32-bit primes") {
    mpz_class prev = mpz_class(1) << 32;
    for (auto q : kDefaultCrtPrimes) {
        mpz_class qq(q);
        CHECK(mpz_probab_prime_p(qq.get_mpz_t(), 40) != 0);
        for (mpz_class c = qq + 1; c < prev; ++c)
            CHECK(mpz_probab_prime_p(c.get_mpz_t(), 40) == 0);
        prev = qq;
    }
}

TEST_CASE("u128 byte and hex round trips") {
    Prg prg(std::uint64_t{7});
    for (int i = 0; i < 200; ++i) {
        u128 v = prg.next_u128();
        std::uint8_t b[16];
        u128_to_le_bytes(v, b);
        CHECK(u128_from_le_bytes(b) == v);
        std::string h = u128_to_hex(v);
        CHECK(h.size() == 32);
        CHECK(u128_from_hex(h) == v);
    }
    CHECK(u128_to_hex(0) == std::string(32, '0'));
    CHECK(u128_from_hex("000000000000000000000000000000ff") == 255);
}

TEST_CASE("mul_wide against gmp") {
    Prg prg(std::uint64_t{8});
    for (int i = 0; i < 500; ++i) {
        u128 a = prg.next_u128(), b = prg.next_u128();
        u128 hi, lo;
        mul_wide(a, b, hi, lo);
        mpz_class prod = to_mpz(a) * to_mpz(b);
        CHECK(to_mpz(lo) + (to_mpz(hi) << 128) == prod);
    }
}

TEST_CASE("modular arithmetic matches gmp for all modulus kinds") {
    Prg prg(std::uint64_t{9});
    std::vector<Modulus> mods{Modulus::default_prime(), Modulus(251), Modulus(11),
                              Modulus(u128{4294967291u}),
                              Modulus((u128{1} << 89) - 1)}; // Mersenne, generic path
    for (const auto& mod : mods) {
        mpz_class p = to_mpz(mod.p());
        for (int i = 0; i < 300; ++i) {
            u128 a = prg.uniform(mod), b = prg.uniform(mod);
            CHECK(to_mpz(mod.add(a, b)) == (to_mpz(a) + to_mpz(b)) % p);
            CHECK(to_mpz(mod.sub(a, b)) == ((to_mpz(a) - to_mpz(b)) % p + p) % p);
            CHECK(to_mpz(mod.mul(a, b)) == (to_mpz(a) * to_mpz(b)) % p);
            CHECK(to_mpz(mod.neg(a)) == (p - to_mpz(a)) % p);
            if (a != 0) {
                u128 inv = mod.inv(a);
                CHECK(mod.mul(a, inv) == 1);
            }
        }
        CHECK_THROWS_AS(mod.inv(0), ZeroInverse);
    }
}

TEST_CASE("pow matches gmp") {
    Prg prg(std::uint64_t{10});
    Modulus mod = Modulus::default_prime();
    mpz_class p = to_mpz(mod.p());
    for (int i = 0; i < 50; ++i) {
        u128 b = prg.uniform(mod), e = prg.next_u128();
        mpz_class expect;
        mpz_class eb = to_mpz(e), bb = to_mpz(b);
        mpz_powm(expect.get_mpz_t(), bb.get_mpz_t(), eb.get_mpz_t(), p.get_mpz_t());
        CHECK(to_mpz(mod.pow(b, e)) == expect);
    }
}

TEST_CASE("crt decompose/recombine identity and ring consistency") {
    CrtSystem sys = CrtSystem::defaults();
    Modulus ring = Modulus::from_crt(sys);
    mpz_class product = 1;
    for (auto q : kDefaultCrtPrimes) product *= q;
    CHECK(to_mpz(sys.product) == product);
    CHECK(ring.p() == sys.product);

    Prg prg(std::uint64_t{11});
    for (int i = 0; i < 300; ++i) {
        u128 a = prg.uniform(ring);
        auto res = sys.decompose(a);
        for (int c = 0; c < 4; ++c)
            CHECK(res[static_cast<std::size_t>(c)] ==
                  from_mpz(to_mpz(a) % kDefaultCrtPrimes[static_cast<std::size_t>(c)]));
        CHECK(sys.recombine(res) == a);

        u128 b = prg.uniform(ring);
        // ring ops agree with per-residue ops
        auto ra = sys.decompose(a), rb = sys.decompose(b);
        std::array<std::uint32_t, 4> sum{}, prod{};
        for (std::size_t c = 0; c < 4; ++c) {
            std::uint64_t q = kDefaultCrtPrimes[c];
            sum[c] = static_cast<std::uint32_t>((std::uint64_t{ra[c]} + rb[c]) % q);
            prod[c] = static_cast<std::uint32_t>(
                static_cast<std::uint64_t>((static_cast<unsigned __int128>(ra[c]) * rb[c]) % q));
        }
        CHECK(sys.recombine(sum) == ring.add(a, b));
        CHECK(sys.recombine(prod) == ring.mul(a, b));
    }

    // inverses exist for units of the ring
    for (int i = 0; i < 50; ++i) {
        u128 a = prg.uniform(ring);
        auto res = sys.decompose(a);
        bool unit = res[0] && res[1] && res[2] && res[3];
        if (!unit) continue;
        CHECK(ring.mul(a, ring.inv(a)) == 1);
    }

    auto ser = sys.serialize();
    CrtSystem back = CrtSystem::deserialize(ser.data());
    CHECK(back.primes == sys.primes);
    CHECK(back.product == sys.product);
}

TEST_CASE("reduce_element enforces canonicity") {
    Modulus mod(251);
    std::uint8_t b[16] = {0};
    b[0] = 250;
    CHECK(mod.reduce_element(b) == 250);
    b[0] = 251;
    CHECK_THROWS_AS(mod.reduce_element(b), OutOfRange);
    Modulus big = Modulus::default_prime();
    std::uint8_t c[16];
    u128_to_le_bytes(kDefaultPrime, c);
    CHECK_THROWS_AS(big.reduce_element(c), OutOfRange);
    u128_to_le_bytes(kDefaultPrime - 1, c);
    CHECK(big.reduce_element(c) == kDefaultPrime - 1);
}

TEST_CASE("hash_to_element is deterministic and in range") {
    Modulus mod(251);
    u128 a = mod.hash_to_element("abc", 3);
    CHECK(a == mod.hash_to_element("abc", 3));
    CHECK(a < 251);
    CHECK(a != mod.hash_to_element("abd", 3));
}

TEST_CASE("prg determinism, child separation, uniform rejection bound") {
    Prg a(std::uint64_t{42}), b(std::uint64_t{42});
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Prg c(std::uint64_t{42});
    Prg c1 = c.child("x"), c2 = c.child("y"), c3 = c.child("x");
    CHECK(c1.next_u128() != c2.next_u128());
    Prg c4 = c.child("x");
    CHECK(c3.next_u128() == c4.next_u128());

    Modulus small(11);
    std::set<u128> seen;
    Prg d(std::uint64_t{5});
    for (int i = 0; i < 500; ++i) {
        u128 v = d.uniform(small);
        CHECK(v < 11);
        seen.insert(v);
    }
    CHECK(seen.size() == 11); // every residue hit
    for (int i = 0; i < 200; ++i) CHECK(d.uniform_u64(7) < 7);
}
