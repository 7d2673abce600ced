#pragma once

#include <optional>
#include <string>
#include <vector>

#include "totpsi/rng.hpp"
#include "totpsi/session.hpp"

namespace totpsi {

struct PlainInstance {
    std::vector<std::vector<u128>> sets; // sets[0] is the leader's
    int t = 2;
};

// Brute-force evaluation of the target functionality: elements of sets[0]
// held by >= t parties overall, with exact counts and holder lists.
IntersectionResult ideal_intersection(const PlainInstance& inst);

// Deterministic instance with planted overlaps. plan[k] (when given) is the
// total holder count for leader element k (1 = leader only); without a plan,
// counts are drawn from {t-1, t, t+1} clipped to [1, n]. Every party's set is
// padded to size m with unique fillers.
PlainInstance gen_instance(int n, int t, std::size_t m, std::uint64_t seed,
                           const Modulus& mod,
                           const std::optional<std::vector<int>>& plan = std::nullopt);

// One element per line, 0x + 32 hex digits; '#' starts a comment.
std::vector<u128> read_set_file(const std::string& path, const Modulus& mod);
void write_set_file(const std::string& path, const std::vector<u128>& set);

} // namespace totpsi
