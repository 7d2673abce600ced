#include "totpsi/st_protocol.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>
#include <unordered_set>

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
                               StLeaderInternals* internals) {
    Prg prg(cfg.seed);
    const Modulus mod = cfg.modulus();
    const auto chs = cfg.channels();
    const auto nch = static_cast<std::uint32_t>(chs.size());

    double* sw = timings ? &timings->share_wall : nullptr;
    double* sc = timings ? &timings->share_cpu : nullptr;
    double* rw = timings ? &timings->recon_wall : nullptr;
    double* rc = timings ? &timings->recon_cpu : nullptr;

    SessionContext ctx;
    std::vector<u128> aliases(set.size());
    std::vector<std::vector<Share>> shares(set.size());
    std::vector<u128> own_updated(set.size());
    std::vector<u128> sum_f1;
    std::vector<std::vector<u128>> recv_f1(static_cast<std::size_t>(cfg.n));
    std::vector<std::vector<u128>> z0;
    {
        ScopedPhase phase(sw, sc);
        ctx = session_setup_leader(cfg, comm, set, prg);
        const std::uint32_t mb = ctx.params.m_b;
        const std::uint32_t beta = ctx.params.beta;

        // aliases: pairwise-distinct random stand-ins for the real elements
        std::unordered_set<u128, U128Hash> used;
        for (auto& a : aliases) {
            do {
                a = prg.uniform(mod);
            } while (!used.insert(a).second);
        }
        std::unordered_map<u128, std::size_t, U128Hash> elem_idx;
        for (std::size_t k = 0; k < set.size(); ++k) {
            shares[k] = share_secret(mod, aliases[k], cfg.t, cfg.n, prg);
            elem_idx.emplace(set[k], k);
        }

        // phase 1: distribute alias shares keyed by the real elements
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

        // phase 2a: only f_{j,b}(1) reaches the leader
        sum_f1.assign(mb, 0);
        for (int j = 1; j < cfg.n; ++j) {
            Bytes blob = recv_blob(comm, static_cast<std::uint8_t>(j), MsgKind::ZeroAtOne, 0);
            if (blob.size() != static_cast<std::size_t>(mb) * 16)
                throw MalformedFrame("zero-at-one blob: bad length");
            std::vector<u128>* keep = nullptr;
            if (internals) {
                recv_f1[static_cast<std::size_t>(j)].resize(mb);
                keep = &recv_f1[static_cast<std::size_t>(j)];
            }
            for (std::uint32_t b = 0; b < mb; ++b) {
                u128 v = read_element(blob.data() + static_cast<std::size_t>(b) * 16, mod);
                sum_f1[b] = mod.add(sum_f1[b], v);
                if (keep) (*keep)[b] = v;
            }
        }
        for (std::size_t k = 0; k < set.size(); ++k)
            own_updated[k] = mod.add(shares[k][0].y, sum_f1[ctx.cuckoo.origin.at(set[k])]);

        // phase 2b: OLE legs with every client; x is the Cuckoo entry, reused
        // across the beta slots of its bin
        std::vector<u128> xs;
        xs.reserve(static_cast<std::size_t>(mb) * beta);
        for (std::uint32_t b = 0; b < mb; ++b)
            for (std::uint32_t v = 0; v < beta; ++v) xs.push_back(ctx.cuckoo.bins[b].value);

        std::vector<OleReceiverSession> sessions;
        sessions.reserve(nch);
        for (std::uint32_t c = 0; c < nch; ++c) sessions.emplace_back(cfg.ole, chs[c], prg);
        for (int j = 1; j < cfg.n; ++j)
            for (std::uint32_t c = 0; c < nch; ++c)
                send_blob(comm, static_cast<std::uint8_t>(j), Phase::Update,
                          MsgKind::OleRequest, c, sessions[c].request(xs, prg));

        std::vector<std::vector<u128>> z0_ch(nch,
                                             std::vector<u128>(static_cast<std::size_t>(mb) * beta, 0));
        for (int j = 1; j < cfg.n; ++j) {
            for (std::uint32_t c = 0; c < nch; ++c) {
                Bytes resp = recv_blob(comm, static_cast<std::uint8_t>(j),
                                       MsgKind::OleResponse, c);
                auto ys = sessions[c].finish(resp);
                if (ys.size() != xs.size()) throw MalformedFrame("ole response: bad count");
                for (std::size_t idx = 0; idx < ys.size(); ++idx)
                    z0_ch[c][idx] = chs[c].add(z0_ch[c][idx], ys[idx]);
            }
        }
        z0.assign(mb, std::vector<u128>(beta, 0));
        std::vector<u128> per_channel(nch);
        for (std::uint32_t b = 0; b < mb; ++b) {
            for (std::uint32_t v = 0; v < beta; ++v) {
                for (std::uint32_t c = 0; c < nch; ++c)
                    per_channel[c] = z0_ch[c][static_cast<std::size_t>(b) * beta + v];
                z0[b][v] = recombine(cfg, mod, per_channel);
            }
        }
    }

    IntersectionResult result;
    result.protocol = Protocol::St;
    result.n = cfg.n;
    result.t = cfg.t;
    std::vector<std::vector<u128>> value3(static_cast<std::size_t>(cfg.n));
    std::vector<std::vector<u128>> index3(static_cast<std::size_t>(cfg.n));
    std::vector<std::vector<u128>> final_y(static_cast<std::size_t>(cfg.n));
    {
        ScopedPhase phase(rw, rc);
        const std::uint32_t mb = ctx.params.m_b;
        const std::uint32_t beta = ctx.params.beta;

        // phase 3: value OPPRF per channel plus one index OPPRF, per client
        std::vector<std::vector<std::vector<OpprfQuery>>> vqueries(
            static_cast<std::size_t>(cfg.n));
        std::vector<std::vector<OpprfQuery>> iqueries(static_cast<std::size_t>(cfg.n));
        for (int i = 1; i < cfg.n; ++i) {
            auto& per_client = vqueries[static_cast<std::size_t>(i)];
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
            Bytes ireq_blob;
            auto& iq = iqueries[static_cast<std::size_t>(i)];
            iq.reserve(mb);
            for (std::uint32_t b = 0; b < mb; ++b) {
                auto tag = opprf_instance_tag(ctx.session_id, MsgKind::IndexRequest,
                                              static_cast<std::uint8_t>(i), 0, b, 0);
                iq.push_back(OpprfQuery::start(cfg.opprf, chs[0], ctx.cuckoo.bins[b].value,
                                               tag, prg));
                append_record(ireq_blob, iq.back().request());
            }
            send_blob(comm, static_cast<std::uint8_t>(i), Phase::Collect,
                      MsgKind::IndexRequest, 0, ireq_blob);
        }
        for (int i = 1; i < cfg.n; ++i) {
            std::vector<std::vector<u128>> vals(nch);
            for (std::uint32_t c = 0; c < nch; ++c) {
                Bytes resp_blob = recv_blob(comm, static_cast<std::uint8_t>(i),
                                            MsgKind::CollectResponse, c);
                auto resps = split_records(resp_blob, mb);
                vals[c].resize(mb);
                for (std::uint32_t b = 0; b < mb; ++b)
                    vals[c][b] = vqueries[static_cast<std::size_t>(i)][c][b].finish(resps[b]);
            }
            Bytes iresp_blob = recv_blob(comm, static_cast<std::uint8_t>(i),
                                         MsgKind::IndexResponse, 0);
            auto iresps = split_records(iresp_blob, mb);

            auto& mu = value3[static_cast<std::size_t>(i)];
            auto& vidx = index3[static_cast<std::size_t>(i)];
            auto& fin = final_y[static_cast<std::size_t>(i)];
            mu.resize(mb);
            vidx.resize(mb);
            fin.resize(mb);
            std::vector<u128> per_channel(nch);
            for (std::uint32_t b = 0; b < mb; ++b) {
                for (std::uint32_t c = 0; c < nch; ++c) per_channel[c] = vals[c][b];
                mu[b] = recombine(cfg, mod, per_channel);
                vidx[b] = iqueries[static_cast<std::size_t>(i)][b].finish(iresps[b]);
                // out-of-range index = pseudorandom case; no retrieval
                fin[b] = vidx[b] < beta ? mod.add(mu[b], z0[b][static_cast<std::size_t>(vidx[b])])
                                        : mu[b];
            }
        }

        for (std::size_t k = 0; k < set.size(); ++k) {
            std::uint32_t b0 = ctx.cuckoo.origin.at(set[k]);
            std::vector<Share> others;
            others.reserve(static_cast<std::size_t>(cfg.n - 1));
            for (int i = 1; i < cfg.n; ++i)
                others.push_back({static_cast<std::uint8_t>(i + 1),
                                  final_y[static_cast<std::size_t>(i)][b0]});
            auto tr = reconstruct_with_trace(mod, Share{1, own_updated[k]}, others, cfg.t,
                                             aliases[k]);
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
        internals->aliases = std::move(aliases);
        internals->shares = std::move(shares);
        internals->own_updated = std::move(own_updated);
        internals->z0 = std::move(z0);
        internals->value3 = std::move(value3);
        internals->index3 = std::move(index3);
        internals->final_y = std::move(final_y);
        internals->recv_f1 = std::move(recv_f1);
        internals->sum_f1 = std::move(sum_f1);
        internals->cuckoo = std::move(ctx.cuckoo);
    }
    return result;
}

void client_impl(const SessionConfig& cfg, Comm& comm, const std::vector<u128>& set,
                 PhaseTimings* timings, StClientInternals* internals) {
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
    std::vector<SharingPolynomial> zero_polys;
    std::vector<std::vector<u128>> z1;
    {
        ScopedPhase phase(sw, sc);
        ctx = session_setup_client(cfg, comm, set);
        const std::uint32_t mb = ctx.params.m_b;
        const std::uint32_t beta = ctx.params.beta;

        // phase 1: identical shape to ET; outputs are alias-share candidates
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

        // phase 2: zero polynomials; only f(1) goes to the leader
        zero_polys.resize(mb);
        for (auto& poly : zero_polys) {
            poly.coefficients.assign(static_cast<std::size_t>(cfg.t), 0);
            for (int d = 1; d < cfg.t; ++d)
                poly.coefficients[static_cast<std::size_t>(d)] = prg.uniform(mod);
        }
        Bytes f1_blob(static_cast<std::size_t>(mb) * 16);
        for (std::uint32_t b = 0; b < mb; ++b)
            u128_to_le_bytes(zero_polys[b].eval(mod, 1),
                             f1_blob.data() + static_cast<std::size_t>(b) * 16);
        send_blob(comm, 0, Phase::Update, MsgKind::ZeroAtOne, 0, f1_blob);

        // per-(bin, slot) OLE correlation, shared by the leader leg and every
        // client leg
        const std::size_t slots = static_cast<std::size_t>(mb) * beta;
        std::vector<u128> r(slots), a0(slots);
        for (std::size_t idx = 0; idx < slots; ++idx) {
            r[idx] = prg.uniform(mod);
            a0[idx] = prg.uniform(mod);
        }

        // own receiver legs toward every other client
        std::vector<u128> xs;
        xs.reserve(slots);
        for (std::uint32_t b = 0; b < mb; ++b)
            for (std::uint32_t v = 0; v < beta; ++v) xs.push_back(ctx.simple.bins[b][v].value);
        std::vector<OleReceiverSession> sessions;
        sessions.reserve(nch);
        for (std::uint32_t c = 0; c < nch; ++c) sessions.emplace_back(cfg.ole, chs[c], prg);
        for (int j = 1; j < cfg.n; ++j) {
            if (j == cfg.self) continue;
            for (std::uint32_t c = 0; c < nch; ++c)
                send_blob(comm, static_cast<std::uint8_t>(j), Phase::Update,
                          MsgKind::OleRequest, c, sessions[c].request(xs, prg));
        }

        // serve the leader: slopes r, offsets a0
        for (std::uint32_t c = 0; c < nch; ++c) {
            Bytes req = recv_blob(comm, 0, MsgKind::OleRequest, c);
            std::vector<u128> slopes(slots), offsets(slots);
            for (std::size_t idx = 0; idx < slots; ++idx) {
                slopes[idx] = r[idx] % chs[c].p();
                offsets[idx] = a0[idx] % chs[c].p();
            }
            send_blob(comm, 0, Phase::Update, MsgKind::OleResponse, c,
                      ole_respond(chs[c], req, slopes, offsets, prg));
        }
        // serve the other clients: slopes -r, offsets f(j+1) - a0
        for (int j = 1; j < cfg.n; ++j) {
            if (j == cfg.self) continue;
            std::vector<u128> a1(slots);
            for (std::uint32_t b = 0; b < mb; ++b) {
                u128 fj = zero_polys[b].eval(mod, static_cast<u128>(j) + 1);
                for (std::uint32_t v = 0; v < beta; ++v) {
                    std::size_t idx = static_cast<std::size_t>(b) * beta + v;
                    a1[idx] = mod.sub(fj, a0[idx]);
                }
            }
            for (std::uint32_t c = 0; c < nch; ++c) {
                Bytes req = recv_blob(comm, static_cast<std::uint8_t>(j), MsgKind::OleRequest,
                                      c);
                std::vector<u128> slopes(slots), offsets(slots);
                for (std::size_t idx = 0; idx < slots; ++idx) {
                    slopes[idx] = chs[c].neg(r[idx] % chs[c].p());
                    offsets[idx] = a1[idx] % chs[c].p();
                }
                send_blob(comm, static_cast<std::uint8_t>(j), Phase::Update,
                          MsgKind::OleResponse, c, ole_respond(chs[c], req, slopes, offsets, prg));
            }
        }

        // accumulate z1: other clients' legs plus the local j = self term
        std::vector<std::vector<u128>> z1_ch(nch, std::vector<u128>(slots, 0));
        for (int j = 1; j < cfg.n; ++j) {
            if (j == cfg.self) continue;
            for (std::uint32_t c = 0; c < nch; ++c) {
                Bytes resp = recv_blob(comm, static_cast<std::uint8_t>(j),
                                       MsgKind::OleResponse, c);
                auto ys = sessions[c].finish(resp);
                if (ys.size() != slots) throw MalformedFrame("ole response: bad count");
                for (std::size_t idx = 0; idx < slots; ++idx)
                    z1_ch[c][idx] = chs[c].add(z1_ch[c][idx], ys[idx]);
            }
        }
        z1.assign(mb, std::vector<u128>(beta, 0));
        std::vector<u128> perch(nch);
        for (std::uint32_t b = 0; b < mb; ++b) {
            u128 own_f = zero_polys[b].eval(mod, own_x);
            for (std::uint32_t v = 0; v < beta; ++v) {
                std::size_t idx = static_cast<std::size_t>(b) * beta + v;
                for (std::uint32_t c = 0; c < nch; ++c) perch[c] = z1_ch[c][idx];
                u128 local = mod.sub(mod.sub(own_f, a0[idx]),
                                     mod.mul(r[idx], ctx.simple.bins[b][v].value % mod.p()));
                z1[b][v] = mod.add(recombine(cfg, mod, perch), local);
            }
        }
    }

    {
        ScopedPhase phase(rw, rc);
        const std::uint32_t mb = ctx.params.m_b;
        const std::uint32_t beta = ctx.params.beta;

        // phase 3a: value OPPRF programs (e, shat + z1[b][v])
        for (std::uint32_t c = 0; c < nch; ++c) {
            Bytes reqs_blob = recv_blob(comm, 0, MsgKind::CollectRequest, c);
            auto reqs = split_records(reqs_blob, mb);
            Bytes resp_blob;
            for (std::uint32_t b = 0; b < mb; ++b) {
                const auto& bin = ctx.simple.bins[b];
                std::vector<u128> ys(bin.size(), 0);
                for (std::size_t s = 0; s < bin.size(); ++s)
                    if (bin[s].real)
                        ys[s] = mod.add(shat[ctx.cuckoo.origin.at(bin[s].value)], z1[b][s]);
                auto pts = bin_points(bin, ys, beta, chs[c], prg);
                auto tag = opprf_instance_tag(ctx.session_id, MsgKind::CollectRequest, self,
                                              0, b, c);
                auto prog = OpprfProgram::make(cfg.opprf, chs[c], pts, tag, prg);
                append_record(resp_blob, prog.respond(reqs[b]));
            }
            send_blob(comm, 0, Phase::Collect, MsgKind::CollectResponse, c, resp_blob);
        }
        // phase 3b: index OPPRF programs (e, slot)
        {
            Bytes reqs_blob = recv_blob(comm, 0, MsgKind::IndexRequest, 0);
            auto reqs = split_records(reqs_blob, mb);
            Bytes resp_blob;
            for (std::uint32_t b = 0; b < mb; ++b) {
                const auto& bin = ctx.simple.bins[b];
                std::vector<u128> ys(bin.size(), 0);
                for (std::size_t s = 0; s < bin.size(); ++s)
                    if (bin[s].real) ys[s] = static_cast<u128>(s);
                auto pts = bin_points(bin, ys, beta, chs[0], prg);
                auto tag = opprf_instance_tag(ctx.session_id, MsgKind::IndexRequest, self, 0,
                                              b, 0);
                auto prog = OpprfProgram::make(cfg.opprf, chs[0], pts, tag, prg);
                append_record(resp_blob, prog.respond(reqs[b]));
            }
            send_blob(comm, 0, Phase::Collect, MsgKind::IndexResponse, 0, resp_blob);
        }
    }

    if (internals) {
        internals->zero_polys = std::move(zero_polys);
        internals->z1 = std::move(z1);
        internals->shat = std::move(shat);
    }
}

} // namespace

IntersectionResult st_run_leader(const SessionConfig& cfg, Comm& comm,
                                 const std::vector<u128>& set, PhaseTimings* timings,
                                 StLeaderInternals* internals) {
    cfg.validate();
    if (!cfg.pad_bins) throw ConfigError("st requires padded bins (slots are load-bearing)");
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

void st_run_client(const SessionConfig& cfg, Comm& comm, const std::vector<u128>& set,
                   PhaseTimings* timings, StClientInternals* internals) {
    cfg.validate();
    if (!cfg.pad_bins) throw ConfigError("st requires padded bins (slots are load-bearing)");
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
