#include "totpsi/simulate.hpp"

#include <sodium.h>
#include <thread>

namespace totpsi {

namespace {

Prg::Seed party_seed(const Prg::Seed& base, int party) {
    Prg prg(base);
    Prg child = prg.child("party." + std::to_string(party));
    Prg::Seed out;
    child.fill(out.data(), out.size());
    return out;
}

} // namespace

SimulateOutcome simulate(const SessionConfig& cfg,
                         const std::vector<std::vector<u128>>& sets,
                         const SimulateOptions& opts) {
    if (sets.size() != static_cast<std::size_t>(cfg.n))
        throw ConfigError("need one input set per party");
    SessionConfig probe = cfg;
    probe.self = 0;
    probe.validate();

    SimulateOutcome out;
    out.transcripts.resize(static_cast<std::size_t>(cfg.n));
    out.timings.resize(static_cast<std::size_t>(cfg.n));
    if (opts.capture_internals) {
        out.et_clients.resize(static_cast<std::size_t>(cfg.n));
        out.st_clients.resize(static_cast<std::size_t>(cfg.n));
    }

    SimNetwork net(cfg.n);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.n));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        threads.emplace_back([&, i] {
            SessionConfig mine = cfg;
            mine.self = i;
            mine.seed = party_seed(cfg.seed, i);
            Transcript* tr = opts.record_transcripts
                                 ? &out.transcripts[static_cast<std::size_t>(i)]
                                 : nullptr;
            Comm comm(net.link(i), i, cfg.n, cfg.timeout_secs, tr);
            auto* timings = &out.timings[static_cast<std::size_t>(i)];
            try {
                if (cfg.protocol == Protocol::Et) {
                    if (i == 0)
                        out.result = et_run_leader(
                            mine, comm, sets[0], timings,
                            opts.capture_internals ? &out.et_leader : nullptr);
                    else
                        et_run_client(mine, comm, sets[static_cast<std::size_t>(i)], timings,
                                      opts.capture_internals
                                          ? &out.et_clients[static_cast<std::size_t>(i)]
                                          : nullptr);
                } else {
                    if (i == 0)
                        out.result = st_run_leader(
                            mine, comm, sets[0], timings,
                            opts.capture_internals ? &out.st_leader : nullptr);
                    else
                        st_run_client(mine, comm, sets[static_cast<std::size_t>(i)], timings,
                                      opts.capture_internals
                                          ? &out.st_clients[static_cast<std::size_t>(i)]
                                          : nullptr);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace totpsi
