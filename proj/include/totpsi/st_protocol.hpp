#pragma once

#include "totpsi/session.hpp"
#include "totpsi/shamir.hpp"

namespace totpsi {

struct StLeaderInternals {
    std::vector<u128> aliases;              // per element, pairwise distinct
    std::vector<std::vector<Share>> shares; // [element][party], sharing the alias
    std::vector<u128> own_updated;          // y_k^0 after the f(1) update
    std::vector<std::vector<u128>> z0;      // [bin][slot]
    std::vector<std::vector<u128>> value3;  // [client][bin]: value-OPPRF output
    std::vector<std::vector<u128>> index3;  // [client][bin]: raw index-OPPRF output
    std::vector<std::vector<u128>> final_y; // [client][bin]: value + retrieved z0
    std::vector<std::vector<u128>> recv_f1; // [client][bin]: f_{j,b}(1)
    std::vector<u128> sum_f1;               // per bin
    CuckooTable cuckoo;
};

struct StClientInternals {
    std::vector<SharingPolynomial> zero_polys; // per bin
    std::vector<std::vector<u128>> z1;         // [bin][slot]
    std::vector<u128> shat;                    // per cuckoo bin
};

IntersectionResult st_run_leader(const SessionConfig& cfg, Comm& comm,
                                 const std::vector<u128>& set,
                                 PhaseTimings* timings = nullptr,
                                 StLeaderInternals* internals = nullptr);

void st_run_client(const SessionConfig& cfg, Comm& comm, const std::vector<u128>& set,
                   PhaseTimings* timings = nullptr,
                   StClientInternals* internals = nullptr);

} // namespace totpsi
