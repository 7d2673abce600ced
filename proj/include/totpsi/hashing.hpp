#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "totpsi/field.hpp"
#include "totpsi/rng.hpp"

namespace totpsi {

// Keyed hash seeds shared by every party in a session. All bin placements
// and dummy values derive from these.
struct HashSeeds {
    std::vector<Prg::Seed> seeds; // one per hash function
    Prg::Seed dummy_seed;         // separate domain for dummy elements

    static HashSeeds derive(const Prg::Seed& session_nonce, int k);
    int k() const { return static_cast<int>(seeds.size()); }

    std::vector<std::uint8_t> serialize() const;
    static HashSeeds deserialize(const std::uint8_t* data, std::size_t len);
};

struct BinParams {
    std::uint32_t m_b;
    std::uint32_t beta;
    std::uint32_t lambda;
};

inline constexpr int kCuckooHashCount = 3;
inline constexpr int kEvictionCap = 500;
inline constexpr int kCuckooRetries = 5;
inline constexpr double kBinExpansion = 1.27;

// m_b = ceil(expansion * m); beta = smallest B such that
// m_b * Pr[Binomial(k*m, 1/m_b) > B] <= 2^-lambda (union bound over bins).
// The tail is evaluated with exact big-rational arithmetic; results are
// memoized per (m, lambda, k).
BinParams derive_params(std::size_t m, int lambda, int k = kCuckooHashCount,
                        double expansion = kBinExpansion);

std::uint32_t bin_index(const Prg::Seed& seed, u128 element, std::uint32_t m_b);
std::vector<std::uint32_t> candidate_bins(const HashSeeds& seeds, u128 element,
                                          std::uint32_t m_b);

// Deterministic dummy for (party, bin, slot); domain-separated from real
// element ingestion and from every other party's dummies.
u128 dummy_element(const Modulus& mod, const Prg::Seed& dummy_seed, std::uint8_t party,
                   std::uint32_t bin, std::uint32_t slot);

struct CuckooEntry {
    u128 value;
    bool real;
};

struct CuckooTable {
    std::vector<CuckooEntry> bins;                       // exactly one entry per bin
    std::unordered_map<u128, std::uint32_t, U128Hash> origin; // element -> bin
};

struct SimpleEntry {
    u128 value;
    bool real;
};

struct SimpleTable {
    std::uint32_t beta;
    std::vector<std::vector<SimpleEntry>> bins; // every bin padded to beta
};

// Stashless insertion, eviction chains capped at kEvictionCap; throws
// InsertionFailure when the cap is hit (session layer retries with fresh
// seeds). Empty bins are filled with dummies.
CuckooTable cuckoo_insert_all(const std::vector<u128>& elements, const HashSeeds& seeds,
                              const BinParams& params, const Modulus& mod,
                              std::uint8_t party);

// Element e is appended to every distinct candidate bin; bins padded to beta.
// Throws BinOverflow if any bin would exceed beta.
SimpleTable simple_insert_all(const std::vector<u128>& elements, const HashSeeds& seeds,
                              const BinParams& params, const Modulus& mod,
                              std::uint8_t party);

} // namespace totpsi
