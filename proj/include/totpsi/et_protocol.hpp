#pragma once

#include "totpsi/session.hpp"
#include "totpsi/shamir.hpp"

namespace totpsi {

// White-box capture for the collusion tests; filled only when requested.
struct EtLeaderInternals {
    std::vector<std::vector<Share>> shares;   // [element][party]
    std::vector<u128> own_updated;            // y_k^0 after the refresh
    std::vector<std::vector<u128>> phase3;    // [client][bin]: collected value, client index 1-based
    std::vector<std::vector<u128>> recv_zero; // [sender][bin]: f_{sender,b}(1)
    std::vector<u128> delta;                  // per bin, at x = 1
    CuckooTable cuckoo;
};

struct EtClientInternals {
    std::vector<SharingPolynomial> zero_polys; // per bin, constant term 0
    std::vector<std::vector<u128>> recv_zero;  // [sender][bin]: f_{sender,b}(own x)
    std::vector<u128> delta;                   // per bin, at own x
    std::vector<u128> shat;                    // per cuckoo bin: phase-1 output
};

IntersectionResult et_run_leader(const SessionConfig& cfg, Comm& comm,
                                 const std::vector<u128>& set,
                                 PhaseTimings* timings = nullptr,
                                 EtLeaderInternals* internals = nullptr);

void et_run_client(const SessionConfig& cfg, Comm& comm, const std::vector<u128>& set,
                   PhaseTimings* timings = nullptr,
                   EtClientInternals* internals = nullptr);

} // namespace totpsi
