#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "totpsi/simulate.hpp"

using nlohmann::json;
using namespace totpsi;

namespace {

// TPSI_LOG: quiet < warn (default) < info < debug
int log_threshold() {
    static const int lvl = [] {
        const char* e = std::getenv("TPSI_LOG");
        std::string s = e ? e : "warn";
        if (s == "quiet") return 0;
        if (s == "warn") return 1;
        if (s == "info") return 2;
        if (s == "debug") return 3;
        return 1;
    }();
    return lvl;
}

void log_warn(const std::string& m) {
    if (log_threshold() >= 1) std::cerr << "totpsi: warning: " << m << "\n";
}
void log_info(const std::string& m) {
    if (log_threshold() >= 2) std::cerr << "totpsi: " << m << "\n";
}
void log_debug(const std::string& m) {
    if (log_threshold() >= 3) std::cerr << "totpsi: debug: " << m << "\n";
}

Protocol parse_protocol(const std::string& s) {
    if (s == "et") return Protocol::Et;
    if (s == "st") return Protocol::St;
    throw ConfigError("unknown protocol: " + s);
}

FieldMode parse_mode(const std::string& s) {
    if (s == "single" || s == "single-modulus") return FieldMode::Single;
    if (s == "crt") return FieldMode::Crt;
    throw ConfigError("unknown field mode: " + s);
}

OpprfBackend parse_opprf(const std::string& s) {
    if (s == "ideal") return OpprfBackend::Ideal;
    if (s == "table" || s == "real") return OpprfBackend::Table;
    throw ConfigError("unknown opprf backend: " + s);
}

OleBackend parse_ole(const std::string& s) {
    if (s == "ideal") return OleBackend::Ideal;
    if (s == "paillier" || s == "homomorphic" || s == "real") return OleBackend::Homomorphic;
    throw ConfigError("unknown ole backend: " + s);
}

const char* protocol_name(Protocol p) { return p == Protocol::Et ? "et" : "st"; }
const char* mode_name(FieldMode m) { return m == FieldMode::Single ? "single" : "crt"; }

struct ToolConfig {
    SessionConfig session;
    std::vector<std::string> endpoints;
    std::vector<std::string> set_files;
    std::uint64_t seed = 0;
    bool has_seed = false;
    json bench; // sweep spec, passed through
};

// CLI flag values; empty string / negative number means "not given".
struct Overrides {
    std::string config_path, protocol, mode, opprf, ole, out;
    std::int64_t seed = -1;
    double timeout_secs = -1;
};

ToolConfig load_config(const Overrides& ov) {
    ToolConfig tc;
    if (!ov.config_path.empty()) {
        std::ifstream in(ov.config_path);
        if (!in) throw ConfigError("cannot open config file: " + ov.config_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse: ") + e.what());
        }
        auto& s = tc.session;
        if (j.contains("protocol")) s.protocol = parse_protocol(j["protocol"]);
        if (j.contains("mode")) s.mode = parse_mode(j["mode"]);
        if (j.contains("n")) s.n = j["n"].get<int>();
        if (j.contains("t")) s.t = j["t"].get<int>();
        if (j.contains("m")) s.m = j["m"].get<std::size_t>();
        if (j.contains("lambda")) s.lambda = j["lambda"].get<int>();
        if (j.contains("self")) s.self = j["self"].get<int>();
        if (j.contains("opprf")) s.opprf = parse_opprf(j["opprf"]);
        if (j.contains("ole")) s.ole = parse_ole(j["ole"]);
        if (j.contains("timeout_secs")) s.timeout_secs = j["timeout_secs"].get<double>();
        if (j.contains("seed")) {
            tc.seed = j["seed"].get<std::uint64_t>();
            tc.has_seed = true;
        }
        if (j.contains("endpoints"))
            tc.endpoints = j["endpoints"].get<std::vector<std::string>>();
        if (j.contains("sets")) tc.set_files = j["sets"].get<std::vector<std::string>>();
        if (j.contains("bench")) tc.bench = j["bench"];
    }
    if (!ov.protocol.empty()) tc.session.protocol = parse_protocol(ov.protocol);
    if (!ov.mode.empty()) tc.session.mode = parse_mode(ov.mode);
    if (!ov.opprf.empty()) tc.session.opprf = parse_opprf(ov.opprf);
    if (!ov.ole.empty()) tc.session.ole = parse_ole(ov.ole);
    if (ov.seed >= 0) {
        tc.seed = static_cast<std::uint64_t>(ov.seed);
        tc.has_seed = true;
    }
    if (ov.timeout_secs > 0) tc.session.timeout_secs = ov.timeout_secs;
    return tc;
}

// Local randomness for one party: deterministic when a seed was given
// (domain-separated per party id), fresh otherwise.
void seed_session(ToolConfig& tc, int self) {
    if (tc.has_seed) {
        Prg prg(tc.seed);
        Prg mine = prg.child("cli.party." + std::to_string(self));
        mine.fill(tc.session.seed.data(), tc.session.seed.size());
    } else {
        tc.session.seed = Prg::random_seed();
    }
}

std::vector<std::vector<u128>> load_sets(const ToolConfig& tc) {
    if (tc.set_files.empty()) {
        if (!tc.has_seed)
            throw ConfigError("no set files configured and no seed to synthesize an instance");
        log_info("no set files given; synthesizing a planted instance from the seed");
        return gen_instance(tc.session.n, tc.session.t, tc.session.m, tc.seed,
                            tc.session.modulus())
            .sets;
    }
    if (static_cast<int>(tc.set_files.size()) != tc.session.n)
        throw ConfigError("config lists " + std::to_string(tc.set_files.size()) +
                          " set files for n=" + std::to_string(tc.session.n));
    std::vector<std::vector<u128>> sets;
    Modulus mod = tc.session.modulus();
    for (const auto& path : tc.set_files) sets.push_back(read_set_file(path, mod));
    return sets;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot open output file: " + out_path);
    out << text << "\n";
}

int cmd_gen_sets(int n, int t, std::size_t m, std::int64_t seed_flag,
                 const std::string& out_dir, const std::string& plan_str) {
    std::uint64_t seed =
        seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : Prg(Prg::random_seed()).next_u64();
    std::optional<std::vector<int>> plan;
    if (!plan_str.empty()) {
        std::vector<int> counts;
        std::stringstream ss(plan_str);
        std::string tok;
        while (std::getline(ss, tok, ','))
            counts.push_back(std::stoi(tok));
        plan = std::move(counts);
    }
    auto inst = gen_instance(n, t, m, seed, Modulus::default_prime(), plan);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    json cfg = {
        {"protocol", "et"}, {"mode", "single"}, {"n", n},    {"t", t},
        {"m", m},           {"seed", seed},     {"sets", json::array()},
    };
    for (int i = 0; i < n; ++i) {
        fs::path p = fs::path(out_dir) / ("party_" + std::to_string(i) + ".txt");
        write_set_file(p.string(), inst.sets[static_cast<std::size_t>(i)]);
        cfg["sets"].push_back(p.string());
        log_info("wrote " + p.string());
    }
    fs::path cfg_path = fs::path(out_dir) / "config.json";
    std::ofstream cf(cfg_path);
    cf << cfg.dump(2) << "\n";
    std::cout << "wrote " << n << " set files and " << cfg_path.string() << "\n";
    return 0;
}

int cmd_run(const std::string& role, ToolConfig tc, const std::string& out_path) {
    int self;
    if (role == "leader") {
        self = 0;
    } else if (role == "client") {
        self = tc.session.self;
        if (self < 1 || self >= tc.session.n)
            throw ConfigError("client role needs config field \"self\" in [1, n-1]");
    } else {
        throw ConfigError("role must be leader or client");
    }
    tc.session.self = self;
    tc.session.validate();
    if (static_cast<int>(tc.endpoints.size()) != tc.session.n)
        throw ConfigError("config needs one endpoint per party");
    if (tc.set_files.empty()) throw ConfigError("run needs set files in the config");
    if (static_cast<int>(tc.set_files.size()) != tc.session.n)
        throw ConfigError("config lists " + std::to_string(tc.set_files.size()) +
                          " set files for n=" + std::to_string(tc.session.n));
    auto set =
        read_set_file(tc.set_files[static_cast<std::size_t>(self)], tc.session.modulus());
    seed_session(tc, self);

    log_info("party " + std::to_string(self) + " connecting to the mesh");
    auto link = tcp_mesh_connect(tc.endpoints, self, tc.session.timeout_secs);
    Comm comm(link, self, tc.session.n, tc.session.timeout_secs);
    log_debug("mesh up; starting " + std::string(protocol_name(tc.session.protocol)));

    if (self == 0) {
        IntersectionResult result = tc.session.protocol == Protocol::Et
                                        ? et_run_leader(tc.session, comm, set)
                                        : st_run_leader(tc.session, comm, set);
        emit(result.to_json(), out_path);
    } else {
        if (tc.session.protocol == Protocol::Et)
            et_run_client(tc.session, comm, set);
        else
            st_run_client(tc.session, comm, set);
        log_info("client " + std::to_string(self) + " finished");
    }
    return 0;
}

// Bin parameters key off m, so every party must agree on it; grow it to the
// largest set rather than rejecting a config whose m was left at the default.
void bump_m(ToolConfig& tc, const std::vector<std::vector<u128>>& sets) {
    std::size_t need = tc.session.m;
    for (const auto& s : sets) need = std::max(need, s.size());
    if (need != tc.session.m) {
        log_warn("raising m from " + std::to_string(tc.session.m) + " to " +
                 std::to_string(need) + " to cover the largest set");
        tc.session.m = need;
    }
}

int cmd_simulate(ToolConfig tc, const std::string& out_path) {
    tc.session.self = 0;
    tc.session.validate();
    auto sets = load_sets(tc);
    bump_m(tc, sets);
    seed_session(tc, 0);
    auto outcome = simulate(tc.session, sets);
    emit(outcome.result.to_json(), out_path);
    return 0;
}

int cmd_verify(ToolConfig tc, const std::string& out_path) {
    tc.session.self = 0;
    tc.session.validate();
    auto sets = load_sets(tc);
    bump_m(tc, sets);
    seed_session(tc, 0);
    auto outcome = simulate(tc.session, sets);

    PlainInstance inst;
    inst.sets = sets;
    inst.t = tc.session.t;
    IntersectionResult expected = ideal_intersection(inst);
    expected.protocol = tc.session.protocol;

    if (outcome.result == expected) {
        emit("verify: OK (" + std::to_string(expected.entries.size()) + " elements)", out_path);
        return 0;
    }
    std::cerr << "verify: MISMATCH\nprotocol output:\n"
              << outcome.result.to_json() << "\nplaintext oracle:\n"
              << expected.to_json() << "\n";
    return 1;
}

struct BenchCase {
    Protocol protocol;
    FieldMode mode;
    int n, t;
    std::size_t m;
};

std::vector<BenchCase> bench_cases(const ToolConfig& tc) {
    const json& b = tc.bench;
    auto as_list = [](const json& v) {
        std::vector<json> out;
        if (v.is_array())
            for (const auto& e : v) out.push_back(e);
        else
            out.push_back(v);
        return out;
    };
    std::vector<BenchCase> cases;
    if (b.contains("cases")) {
        for (const auto& c : b["cases"]) {
            BenchCase bc{tc.session.protocol, tc.session.mode, tc.session.n, tc.session.t,
                         tc.session.m};
            if (c.contains("protocol")) bc.protocol = parse_protocol(c["protocol"]);
            if (c.contains("mode")) bc.mode = parse_mode(c["mode"]);
            if (c.contains("n")) bc.n = c["n"].get<int>();
            if (c.contains("t")) bc.t = c["t"].get<int>();
            if (c.contains("m")) bc.m = c["m"].get<std::size_t>();
            cases.push_back(bc);
        }
        return cases;
    }
    auto protocols = b.contains("protocols")
                         ? as_list(b["protocols"])
                         : std::vector<json>{json(protocol_name(tc.session.protocol))};
    auto modes = b.contains("modes") ? as_list(b["modes"])
                                     : std::vector<json>{json(mode_name(tc.session.mode))};
    auto ns = b.contains("n") ? as_list(b["n"]) : std::vector<json>{json(tc.session.n)};
    auto ts = b.contains("t") ? as_list(b["t"]) : std::vector<json>{json(tc.session.t)};
    auto ms = b.contains("m") ? as_list(b["m"]) : std::vector<json>{json(tc.session.m)};
    for (const auto& pj : protocols)
        for (const auto& mj : modes)
            for (const auto& nj : ns)
                for (const auto& tj : ts)
                    for (const auto& mmj : ms) {
                        BenchCase bc{parse_protocol(pj.get<std::string>()),
                                     parse_mode(mj.get<std::string>()), nj.get<int>(),
                                     tj.get<int>(), mmj.get<std::size_t>()};
                        if (bc.t < 2 || bc.t > bc.n) {
                            log_debug("bench: skipping infeasible (n=" + std::to_string(bc.n) +
                                      ", t=" + std::to_string(bc.t) + ")");
                            continue;
                        }
                        cases.push_back(bc);
                    }
    return cases;
}

int cmd_bench(ToolConfig tc, const std::string& out_path) {
    auto cases = bench_cases(tc);
    if (cases.empty()) throw ConfigError("bench sweep is empty");
    std::ostringstream csv;
    csv << "protocol,mode,n,t,m,share_wall_s,recon_wall_s,total_wall_s\n";
    std::uint64_t base_seed = tc.has_seed ? tc.seed : 1;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        SessionConfig s = tc.session;
        s.protocol = c.protocol;
        s.mode = c.mode;
        s.n = c.n;
        s.t = c.t;
        s.m = c.m;
        s.self = 0;
        s.validate();
        Prg prg(base_seed + i);
        prg.fill(s.seed.data(), s.seed.size());
        auto inst = gen_instance(c.n, c.t, c.m, base_seed + 1000 + i, s.modulus());
        log_info("bench: " + std::string(protocol_name(c.protocol)) + " " + mode_name(c.mode) +
                 " n=" + std::to_string(c.n) + " t=" + std::to_string(c.t) +
                 " m=" + std::to_string(c.m));
        auto outcome = simulate(s, inst.sets);
        const auto& tm = outcome.timings.at(0); // leader
        csv << protocol_name(c.protocol) << ',' << mode_name(c.mode) << ',' << c.n << ','
            << c.t << ',' << c.m << ',' << tm.share_wall << ',' << tm.recon_wall << ','
            << tm.total_wall << "\n";
    }
    std::string text = csv.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    emit(text, out_path);
    return 0;
}

void add_common(CLI::App* sub, Overrides& ov, bool config_required = false) {
    auto* c = sub->add_option("--config", ov.config_path, "JSON run configuration");
    if (config_required) c->required();
    sub->add_option("--protocol", ov.protocol, "et | st");
    sub->add_option("--mode", ov.mode, "single | crt");
    sub->add_option("--backend-opprf", ov.opprf, "ideal | table");
    sub->add_option("--backend-ole", ov.ole, "ideal | paillier");
    sub->add_option("--seed", ov.seed, "deterministic run seed");
    sub->add_option("--out", ov.out, "output file (default: stdout)");
    sub->add_option("--timeout-secs", ov.timeout_secs, "per-receive timeout");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"threshold multi-party private set intersection runner"};
    app.require_subcommand(1);

    // gen-sets
    int gs_n = 3, gs_t = 2;
    std::size_t gs_m = 8;
    std::int64_t gs_seed = -1;
    std::string gs_out = "sets", gs_plan;
    auto* gen = app.add_subcommand("gen-sets", "generate planted set files and a config");
    gen->add_option("--n", gs_n, "number of parties")->check(CLI::PositiveNumber);
    gen->add_option("--t", gs_t, "threshold")->check(CLI::PositiveNumber);
    gen->add_option("--m", gs_m, "set size")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gs_seed, "instance seed");
    gen->add_option("--out", gs_out, "output directory");
    gen->add_option("--plan", gs_plan, "comma-separated holder counts for leader elements");

    Overrides run_ov, sim_ov, ver_ov, bench_ov;
    std::string run_role;
    auto* run = app.add_subcommand("run", "run one party over TCP");
    run->add_option("--role", run_role, "leader | client")->required();
    add_common(run, run_ov, /*config_required=*/true);

    auto* sim = app.add_subcommand("simulate", "run all parties in-process; print result JSON");
    add_common(sim, sim_ov);

    auto* ver = app.add_subcommand("verify", "simulate, then diff against the plaintext oracle");
    add_common(ver, ver_ov);

    auto* bench = app.add_subcommand("bench", "sweep parameters, emit per-phase timings as CSV");
    add_common(bench, bench_ov);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_sets(gs_n, gs_t, gs_m, gs_seed, gs_out, gs_plan);
        if (run->parsed()) return cmd_run(run_role, load_config(run_ov), run_ov.out);
        if (sim->parsed()) return cmd_simulate(load_config(sim_ov), sim_ov.out);
        if (ver->parsed()) return cmd_verify(load_config(ver_ov), ver_ov.out);
        if (bench->parsed()) return cmd_bench(load_config(bench_ov), bench_ov.out);
    } catch (const Error& e) {
        std::cerr << "totpsi: error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "totpsi: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
