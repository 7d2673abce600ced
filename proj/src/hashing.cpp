#include "totpsi/hashing.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <tuple>
#include <cstring>
#include <map>
#include <mutex>
#include <sodium.h>

namespace totpsi {

using boost::multiprecision::cpp_int;

HashSeeds HashSeeds::derive(const Prg::Seed& session_nonce, int k) {
    if (k < 2) throw ConfigError("need at least 2 hash functions");
    Prg prg{session_nonce};
    HashSeeds hs;
    hs.seeds.resize(static_cast<std::size_t>(k));
    for (auto& s : hs.seeds) {
        Prg child = prg.child("hash." + std::to_string(&s - hs.seeds.data()));
        child.fill(s.data(), s.size());
    }
    Prg d = prg.child("dummy");
    d.fill(hs.dummy_seed.data(), hs.dummy_seed.size());
    return hs;
}

std::vector<std::uint8_t> HashSeeds::serialize() const {
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(seeds.size()));
    for (const auto& s : seeds) out.insert(out.end(), s.begin(), s.end());
    out.insert(out.end(), dummy_seed.begin(), dummy_seed.end());
    return out;
}

HashSeeds HashSeeds::deserialize(const std::uint8_t* data, std::size_t len) {
    if (len < 1) throw MalformedFrame("hash seeds: empty");
    std::size_t k = data[0];
    if (len != 1 + 32 * (k + 1)) throw MalformedFrame("hash seeds: bad length");
    HashSeeds hs;
    hs.seeds.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        std::memcpy(hs.seeds[i].data(), data + 1 + 32 * i, 32);
    std::memcpy(hs.dummy_seed.data(), data + 1 + 32 * k, 32);
    return hs;
}

std::uint32_t bin_index(const Prg::Seed& seed, u128 element, std::uint32_t m_b) {
    std::uint8_t msg[16], out[8];
    u128_to_le_bytes(element, msg);
    crypto_generichash(out, sizeof(out), msg, sizeof(msg), seed.data(), seed.size());
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | out[i];
    return static_cast<std::uint32_t>(v % m_b);
}

std::vector<std::uint32_t> candidate_bins(const HashSeeds& seeds, u128 element,
                                          std::uint32_t m_b) {
    std::vector<std::uint32_t> bins;
    bins.reserve(seeds.seeds.size());
    for (const auto& s : seeds.seeds) bins.push_back(bin_index(s, element, m_b));
    return bins;
}

u128 dummy_element(const Modulus& mod, const Prg::Seed& dummy_seed, std::uint8_t party,
                   std::uint32_t bin, std::uint32_t slot) {
    std::uint8_t msg[5 + 1 + 4 + 4] = {'d', 'u', 'm', 'm', 'y'};
    msg[5] = party;
    for (int i = 0; i < 4; ++i) msg[6 + i] = static_cast<std::uint8_t>(bin >> (8 * i));
    for (int i = 0; i < 4; ++i) msg[10 + i] = static_cast<std::uint8_t>(slot >> (8 * i));
    std::uint8_t out[16];
    crypto_generichash(out, sizeof(out), msg, sizeof(msg), dummy_seed.data(),
                       dummy_seed.size());
    return u128_from_le_bytes(out) % mod.p();
}

namespace {

struct ParamKey {
    std::size_t m;
    int lambda;
    int k;
    std::uint32_t m_b;
    bool operator<(const ParamKey& o) const {
        return std::tie(m, lambda, k, m_b) < std::tie(o.m, o.lambda, o.k, o.m_b);
    }
};

// Smallest B with m_b * Pr[Binomial(N, 1/m_b) > B] <= 2^-lambda, computed
// with exact integer arithmetic: term numerators n_j = C(N,j)(m_b-1)^(N-j)
// over the common denominator m_b^N; the recurrence stays integral.
std::uint32_t exact_beta(std::size_t N, std::uint32_t m_b, int lambda) {
    if (m_b <= 1) return static_cast<std::uint32_t>(N);
    cpp_int den = boost::multiprecision::pow(cpp_int(m_b), static_cast<unsigned>(N));
    cpp_int n = boost::multiprecision::pow(cpp_int(m_b - 1), static_cast<unsigned>(N));
    cpp_int cum = n;
    cpp_int scale = cpp_int(m_b) << lambda; // m_b * 2^lambda
    for (std::size_t j = 0; j <= N; ++j) {
        cpp_int tail = den - cum;
        if (scale * tail <= den) return static_cast<std::uint32_t>(j);
        if (j == N) break;
        n = n * cpp_int(N - j) / (cpp_int(j + 1) * (m_b - 1));
        cum += n;
    }
    return static_cast<std::uint32_t>(N);
}

} // namespace

BinParams derive_params(std::size_t m, int lambda, int k, double expansion) {
    if (m < 1) throw ConfigError("set size must be >= 1");
    auto m_b = static_cast<std::uint32_t>(std::ceil(expansion * static_cast<double>(m)));
    if (m_b < 2) m_b = 2;

    static std::map<ParamKey, std::uint32_t> cache;
    static std::mutex mu;
    ParamKey key{m, lambda, k, m_b};
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return {m_b, it->second, static_cast<std::uint32_t>(lambda)};
    }
    std::uint32_t beta = exact_beta(m * static_cast<std::size_t>(k), m_b, lambda);
    if (beta < 1) beta = 1;
    {
        std::lock_guard<std::mutex> lock(mu);
        cache[key] = beta;
    }
    return {m_b, beta, static_cast<std::uint32_t>(lambda)};
}

CuckooTable cuckoo_insert_all(const std::vector<u128>& elements, const HashSeeds& seeds,
                              const BinParams& params, const Modulus& mod,
                              std::uint8_t party) {
    if (elements.size() > params.m_b) throw InsertionFailure("more elements than bins");
    const int k = seeds.k();
    std::vector<u128> values(params.m_b, 0);
    std::vector<bool> occupied(params.m_b, false);
    std::vector<int> placed_with(params.m_b, 0); // hash index used for occupant

    for (u128 e : elements) {
        u128 cur = e;
        int hash_idx = 0;
        for (int hops = 0;; ++hops) {
            if (hops > kEvictionCap) throw InsertionFailure("eviction chain cap exceeded");
            auto bins = candidate_bins(seeds, cur, params.m_b);
            bool done = false;
            for (int i = 0; i < k; ++i) {
                std::uint32_t b = bins[static_cast<std::size_t>(i)];
                if (!occupied[b]) {
                    values[b] = cur;
                    occupied[b] = true;
                    placed_with[b] = i;
                    done = true;
                    break;
                }
            }
            if (done) break;
            std::uint32_t b = bins[static_cast<std::size_t>(hash_idx)];
            std::swap(cur, values[b]);
            int old_idx = placed_with[b];
            placed_with[b] = hash_idx;
            hash_idx = (old_idx + 1) % k;
        }
    }

    CuckooTable table;
    table.bins.resize(params.m_b);
    for (std::uint32_t b = 0; b < params.m_b; ++b) {
        if (occupied[b]) {
            table.bins[b] = {values[b], true};
            table.origin.emplace(values[b], b);
        } else {
            u128 d = dummy_element(mod, seeds.dummy_seed, party, b, 0xFFFFFFFFu);
            table.bins[b] = {d, false};
        }
    }
    // Dummy/real collision is ~m * 2^-128; screened so it can only force a
    // seed retry, never a silent wrong placement.
    for (const auto& bin : table.bins)
        if (!bin.real && table.origin.count(bin.value))
            throw InsertionFailure("dummy collided with a real element");
    return table;
}

SimpleTable simple_insert_all(const std::vector<u128>& elements, const HashSeeds& seeds,
                              const BinParams& params, const Modulus& mod,
                              std::uint8_t party) {
    SimpleTable table;
    table.beta = params.beta;
    table.bins.resize(params.m_b);
    for (u128 e : elements) {
        auto bins = candidate_bins(seeds, e, params.m_b);
        std::sort(bins.begin(), bins.end());
        bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
        for (std::uint32_t b : bins) {
            if (table.bins[b].size() >= params.beta)
                throw BinOverflow("simple bin exceeded beta");
            table.bins[b].push_back({e, true});
        }
    }
    for (std::uint32_t b = 0; b < params.m_b; ++b) {
        auto& bin = table.bins[b];
        std::uint32_t slot = static_cast<std::uint32_t>(bin.size());
        while (bin.size() < params.beta)
            bin.push_back({dummy_element(mod, seeds.dummy_seed, party, b, slot++), false});
    }
    return table;
}

} // namespace totpsi
