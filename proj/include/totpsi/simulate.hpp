#pragma once

#include "totpsi/et_protocol.hpp"
#include "totpsi/oracle.hpp"
#include "totpsi/st_protocol.hpp"

namespace totpsi {

struct SimulateOptions {
    bool record_transcripts = false;
    bool capture_internals = false;
};

struct SimulateOutcome {
    IntersectionResult result;
    std::vector<Transcript> transcripts;  // per party (empty unless recorded)
    std::vector<PhaseTimings> timings;    // per party
    EtLeaderInternals et_leader;
    std::vector<EtClientInternals> et_clients;
    StLeaderInternals st_leader;
    std::vector<StClientInternals> st_clients;
};

// Runs all n parties as threads over the in-process network. cfg.self is
// ignored; per-party randomness is derived from cfg.seed.
SimulateOutcome simulate(const SessionConfig& cfg,
                         const std::vector<std::vector<u128>>& sets,
                         const SimulateOptions& opts = {});

} // namespace totpsi
