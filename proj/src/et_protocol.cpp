#include "totpsi/et_protocol.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>

namespace totpsi {

namespace {

double wall_secs() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

u128 read_element(const std::uint8_t* p, const Modulus& mod) {
    u128 v = u128_from_le_bytes(p);
    if (v >= mod.p()) throw MalformedFrame("field element out of range");
    return v;
}

// Recombine one per-channel value vector into the protocol modulus.
u128 recombine(const SessionConfig& cfg, const Modulus& mod,
               const std::vector<u128>& per_channel) {
    if (cfg.mode == FieldMode::Single) return per_channel[0];
    std::array<std::uint32_t, 4> res{};
    for (int c = 0; c < 4; ++c)
        res[static_cast<std::size_t>(c)] =
            static_cast<std::uint32_t>(per_channel[static_cast<std::size_t>(c)]);
    return mod.crt().recombine(res);
}

struct ScopedPhase {
    double w0, c0;
    double *wall, *cpu;
    ScopedPhase(double* w, double* c) : w0(wall_secs()), c0(thread_cpu_secs()), wall(w), cpu(c) {}
    ~ScopedPhase() {
        if (wall) *wall += wall_secs() - w0;
        if (cpu) *cpu += thread_cpu_secs() - c0;
    }
};

IntersectionResult leader_impl(const SessionConfig& cfg, Comm& comm,
                               const std::vector<u128>& set, PhaseTimings* timings,
                               EtLeaderInternals* internals) {
    Prg prg(cfg.seed);
    const Modulus mod = cfg.modulus();
    const auto chs = cfg.channels();
    const auto nch = static_cast<std::uint32_t>(chs.size());

    double* sw = timings ? &timings->share_wall : nullptr;
    double* sc = timings ? &timings->share_cpu : nullptr;
    double* rw = timings ? &timings->recon_wall : nullptr;
    double* rc = timings ? &timings->recon_cpu : nullptr;

    SessionContext ctx;
    std::vector<std::vector<Share>> shares(set.size());
    std::vector<u128> delta;
    std::vector<u128> own_updated(set.size());
    std::vector<std::vector<u128>> recv_zero(static_cast<std::size_t>(cfg.n));
    {
        ScopedPhase phase(sw, sc);
        ctx = session_setup_leader(cfg, comm, set, prg);
        const std::uint32_t mb = ctx.params.m_b;
        const std::uint32_t beta = ctx.params.beta;

        // phase 1: one sharing per element, distributed per (client, bin)
        std::unordered_map<u128, std::size_t, U128Hash> elem_idx;
        for (std::size_t k = 0; k < set.size(); ++k) {
            shares[k] = share_secret(mod, set[k], cfg.t, cfg.n, prg);
            elem_idx.emplace(set[k], k);
        }
        for (int i = 1; i < cfg.n; ++i) {
            for (std::uint32_t c = 0; c < nch; ++c) {
                Bytes reqs_blob =
                    recv_blob(comm, static_cast<std::uint8_t>(i), MsgKind::OpprfRequest, c);
                auto reqs = split_records(reqs_blob, mb);
                Bytes resp_blob;
                for (std::uint32_t b = 0; b < mb; ++b) {
                    const auto& bin = ctx.simple.bins[b];
                    std::vector<u128> ys(bin.size(), 0);
                    for (std::size_t s = 0; s < bin.size(); ++s)
                        if (bin[s].real)
                            ys[s] = shares[elem_idx.at(bin[s].value)][static_cast<std::size_t>(i)].y;
                    auto pts = bin_points(bin, ys, beta, chs[c], prg);
                    auto tag = opprf_instance_tag(ctx.session_id, MsgKind::OpprfRequest, 0,
                                                  static_cast<std::uint8_t>(i), b, c);
                    auto prog = OpprfProgram::make(cfg.opprf, chs[c], pts, tag, prg);
                    append_record(resp_blob, prog.respond(reqs[b]));
                }
                send_blob(comm, static_cast<std::uint8_t>(i), Phase::Share,
                          MsgKind::OpprfResponse, c, resp_blob);
            }
        }

        // phase 2: collect all n-1 zero-share contributions, then update
        delta.assign(mb, 0);
        for (int i = 1; i < cfg.n; ++i) {
            Bytes blob = recv_blob(comm, static_cast<std::uint8_t>(i), MsgKind::ZeroShare, 0);
            if (blob.size() != static_cast<std::size_t>(mb) * 16)
                throw MalformedFrame("zero-share blob: bad length");
            std::vector<u128>* keep = nullptr;
            if (internals) {
                recv_zero[static_cast<std::size_t>(i)].resize(mb);
                keep = &recv_zero[static_cast<std::size_t>(i)];
            }
            for (std::uint32_t b = 0; b < mb; ++b) {
                u128 v = read_element(blob.data() + static_cast<std::size_t>(b) * 16, mod);
                delta[b] = mod.add(delta[b], v);
                if (keep) (*keep)[b] = v;
            }
        }
        for (std::size_t k = 0; k < set.size(); ++k)
            own_updated[k] = mod.add(shares[k][0].y, delta[ctx.cuckoo.origin.at(set[k])]);
    }

    IntersectionResult result;
    result.protocol = Protocol::Et;
    result.n = cfg.n;
    result.t = cfg.t;
    std::vector<std::vector<u128>> collected(static_cast<std::size_t>(cfg.n));
    {
        ScopedPhase phase(rw, rc);
        const std::uint32_t mb = ctx.params.m_b;

        // phase 3: query every client's programmed bins with own Cuckoo entries
        std::vector<std::vector<std::vector<OpprfQuery>>> queries(
            static_cast<std::size_t>(cfg.n));
        for (int i = 1; i < cfg.n; ++i) {
            auto& per_client = queries[static_cast<std::size_t>(i)];
            per_client.resize(nch);
            for (std::uint32_t c = 0; c < nch; ++c) {
                Bytes req_blob;
                per_client[c].reserve(mb);
                for (std::uint32_t b = 0; b < mb; ++b) {
                    auto tag = opprf_instance_tag(ctx.session_id, MsgKind::CollectRequest,
                                                  static_cast<std::uint8_t>(i), 0, b, c);
                    per_client[c].push_back(OpprfQuery::start(
                        cfg.opprf, chs[c], ctx.cuckoo.bins[b].value, tag, prg));
                    append_record(req_blob, per_client[c].back().request());
                }
                send_blob(comm, static_cast<std::uint8_t>(i), Phase::Collect,
                          MsgKind::CollectRequest, c, req_blob);
            }
        }
        for (int i = 1; i < cfg.n; ++i) {
            std::vector<std::vector<u128>> vals(nch);
            for (std::uint32_t c = 0; c < nch; ++c) {
                Bytes resp_blob = recv_blob(comm, static_cast<std::uint8_t>(i),
                                            MsgKind::CollectResponse, c);
                auto resps = split_records(resp_blob, mb);
                vals[c].resize(mb);
                for (std::uint32_t b = 0; b < mb; ++b)
                    vals[c][b] = queries[static_cast<std::size_t>(i)][c][b].finish(resps[b]);
            }
            auto& mu = collected[static_cast<std::size_t>(i)];
            mu.resize(mb);
            std::vector<u128> per_channel(nch);
            for (std::uint32_t b = 0; b < mb; ++b) {
                for (std::uint32_t c = 0; c < nch; ++c) per_channel[c] = vals[c][b];
                mu[b] = recombine(cfg, mod, per_channel);
            }
        }

        for (std::size_t k = 0; k < set.size(); ++k) {
            std::uint32_t b0 = ctx.cuckoo.origin.at(set[k]);
            std::vector<Share> others;
            others.reserve(static_cast<std::size_t>(cfg.n - 1));
            for (int i = 1; i < cfg.n; ++i)
                others.push_back({static_cast<std::uint8_t>(i + 1),
                                  collected[static_cast<std::size_t>(i)][b0]});
            auto tr = reconstruct_with_trace(mod, Share{1, own_updated[k]}, others, cfg.t,
                                             set[k]);
            if (!tr.secret_matched) continue;
            IntersectionEntry entry;
            entry.element = set[k];
            entry.count = static_cast<int>(tr.holders.size());
            for (auto h : tr.holders) entry.holders.push_back(h);
            result.entries.push_back(std::move(entry));
        }
        std::sort(result.entries.begin(), result.entries.end(),
                  [](const IntersectionEntry& a, const IntersectionEntry& b) {
                      return a.element < b.element;
                  });
    }

    if (internals) {
        internals->shares = std::move(shares);
        internals->own_updated = std::move(own_updated);
        internals->phase3 = std::move(collected);
        internals->recv_zero = std::move(recv_zero);
        internals->delta = std::move(delta);
        internals->cuckoo = std::move(ctx.cuckoo);
    }
    return result;
}

void client_impl(const SessionConfig& cfg, Comm& comm, const std::vector<u128>& set,
                 PhaseTimings* timings, EtClientInternals* internals) {
    Prg prg(cfg.seed);
    const Modulus mod = cfg.modulus();
    const auto chs = cfg.channels();
    const auto nch = static_cast<std::uint32_t>(chs.size());
    const auto self = static_cast<std::uint8_t>(cfg.self);
    const u128 own_x = static_cast<u128>(cfg.self) + 1;

    double* sw = timings ? &timings->share_wall : nullptr;
    double* sc = timings ? &timings->share_cpu : nullptr;
    double* rw = timings ? &timings->recon_wall : nullptr;
    double* rc = timings ? &timings->recon_cpu : nullptr;

    SessionContext ctx;
    std::vector<u128> shat;
    std::vector<u128> delta;
    std::vector<SharingPolynomial> zero_polys;
    std::vector<std::vector<u128>> recv_zero(static_cast<std::size_t>(cfg.n));
    {
        ScopedPhase phase(sw, sc);
        ctx = session_setup_client(cfg, comm, set);
        const std::uint32_t mb = ctx.params.m_b;

        // phase 1: query the leader's per-bin programs with own Cuckoo entries
        std::vector<std::vector<OpprfQuery>> queries(nch);
        for (std::uint32_t c = 0; c < nch; ++c) {
            Bytes req_blob;
            queries[c].reserve(mb);
            for (std::uint32_t b = 0; b < mb; ++b) {
                auto tag = opprf_instance_tag(ctx.session_id, MsgKind::OpprfRequest, 0, self,
                                              b, c);
                queries[c].push_back(
                    OpprfQuery::start(cfg.opprf, chs[c], ctx.cuckoo.bins[b].value, tag, prg));
                append_record(req_blob, queries[c].back().request());
            }
            send_blob(comm, 0, Phase::Share, MsgKind::OpprfRequest, c, req_blob);
        }
        std::vector<std::vector<u128>> vals(nch);
        for (std::uint32_t c = 0; c < nch; ++c) {
            Bytes resp_blob = recv_blob(comm, 0, MsgKind::OpprfResponse, c);
            auto resps = split_records(resp_blob, mb);
            vals[c].resize(mb);
            for (std::uint32_t b = 0; b < mb; ++b) vals[c][b] = queries[c][b].finish(resps[b]);
        }
        shat.resize(mb);
        std::vector<u128> per_channel(nch);
        for (std::uint32_t b = 0; b < mb; ++b) {
            for (std::uint32_t c = 0; c < nch; ++c) per_channel[c] = vals[c][b];
            shat[b] = recombine(cfg, mod, per_channel);
        }

        // phase 2: per-bin zero polynomials; evaluations go to every party
        zero_polys.resize(mb);
        for (auto& poly : zero_polys) {
            poly.coefficients.assign(static_cast<std::size_t>(cfg.t), 0);
            for (int d = 1; d < cfg.t; ++d)
                poly.coefficients[static_cast<std::size_t>(d)] = prg.uniform(mod);
        }
        for (int j = 0; j < cfg.n; ++j) {
            if (j == cfg.self) continue;
            Bytes blob(static_cast<std::size_t>(mb) * 16);
            for (std::uint32_t b = 0; b < mb; ++b)
                u128_to_le_bytes(zero_polys[b].eval(mod, static_cast<u128>(j) + 1),
                                 blob.data() + static_cast<std::size_t>(b) * 16);
            send_blob(comm, static_cast<std::uint8_t>(j), Phase::Update, MsgKind::ZeroShare,
                      0, blob);
        }
        delta.assign(mb, 0);
        for (std::uint32_t b = 0; b < mb; ++b) delta[b] = zero_polys[b].eval(mod, own_x);
        for (int j = 1; j < cfg.n; ++j) {
            if (j == cfg.self) continue;
            Bytes blob = recv_blob(comm, static_cast<std::uint8_t>(j), MsgKind::ZeroShare, 0);
            if (blob.size() != static_cast<std::size_t>(mb) * 16)
                throw MalformedFrame("zero-share blob: bad length");
            std::vector<u128>* keep = nullptr;
            if (internals) {
                recv_zero[static_cast<std::size_t>(j)].resize(mb);
                keep = &recv_zero[static_cast<std::size_t>(j)];
            }
            for (std::uint32_t b = 0; b < mb; ++b) {
                u128 v = read_element(blob.data() + static_cast<std::size_t>(b) * 16, mod);
                delta[b] = mod.add(delta[b], v);
                if (keep) (*keep)[b] = v;
            }
        }
    }

    {
        ScopedPhase phase(rw, rc);
        const std::uint32_t mb = ctx.params.m_b;
        const std::uint32_t beta = ctx.params.beta;

        // phase 3: program (e, shat + delta_b) per Simple bin; serve the leader
        for (std::uint32_t c = 0; c < nch; ++c) {
            Bytes reqs_blob = recv_blob(comm, 0, MsgKind::CollectRequest, c);
            auto reqs = split_records(reqs_blob, mb);
            Bytes resp_blob;
            for (std::uint32_t b = 0; b < mb; ++b) {
                const auto& bin = ctx.simple.bins[b];
                std::vector<u128> ys(bin.size(), 0);
                for (std::size_t s = 0; s < bin.size(); ++s)
                    if (bin[s].real)
                        ys[s] = mod.add(shat[ctx.cuckoo.origin.at(bin[s].value)], delta[b]);
                auto pts = bin_points(bin, ys, beta, chs[c], prg);
                auto tag = opprf_instance_tag(ctx.session_id, MsgKind::CollectRequest, self,
                                              0, b, c);
                auto prog = OpprfProgram::make(cfg.opprf, chs[c], pts, tag, prg);
                append_record(resp_blob, prog.respond(reqs[b]));
            }
            send_blob(comm, 0, Phase::Collect, MsgKind::CollectResponse, c, resp_blob);
        }
    }

    if (internals) {
        internals->zero_polys = std::move(zero_polys);
        internals->recv_zero = std::move(recv_zero);
        internals->delta = std::move(delta);
        internals->shat = std::move(shat);
    }
}

} // namespace

IntersectionResult et_run_leader(const SessionConfig& cfg, Comm& comm,
                                 const std::vector<u128>& set, PhaseTimings* timings,
                                 EtLeaderInternals* internals) {
    cfg.validate();
    double w0 = wall_secs();
    try {
        auto result = leader_impl(cfg, comm, set, timings, internals);
        if (timings) timings->total_wall = wall_secs() - w0;
        return result;
    } catch (const ProtocolAbort&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        abort_session(comm, {});
        throw ProtocolAbort(std::string("leader aborted: ") + e.what());
    }
}

void et_run_client(const SessionConfig& cfg, Comm& comm, const std::vector<u128>& set,
                   PhaseTimings* timings, EtClientInternals* internals) {
    cfg.validate();
    double w0 = wall_secs();
    try {
        client_impl(cfg, comm, set, timings, internals);
        if (timings) timings->total_wall = wall_secs() - w0;
    } catch (const ProtocolAbort&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        abort_session(comm, {});
        throw ProtocolAbort(std::string("client aborted: ") + e.what());
    }
}

} // namespace totpsi
