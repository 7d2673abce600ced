#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "totpsi/simulate.hpp"

namespace py = pybind11;
using namespace totpsi;

namespace {

// Elements cross the Python boundary as 0x-prefixed 32-hex-digit strings so
// 128-bit values survive without bigint conversion surprises.
u128 from_hex(const std::string& s) {
    std::string t = s;
    if (t.rfind("0x", 0) == 0 || t.rfind("0X", 0) == 0) t = t.substr(2);
    if (t.size() < 32) t.insert(0, 32 - t.size(), '0');
    return u128_from_hex(t);
}

std::string to_hex(u128 v) { return "0x" + u128_to_hex(v); }

std::vector<std::vector<u128>> sets_from_hex(const std::vector<std::vector<std::string>>& in) {
    std::vector<std::vector<u128>> out;
    out.reserve(in.size());
    for (const auto& s : in) {
        std::vector<u128> row;
        row.reserve(s.size());
        for (const auto& e : s) row.push_back(from_hex(e));
        out.push_back(std::move(row));
    }
    return out;
}

SessionConfig make_config(const std::string& protocol, const std::string& mode, int n, int t,
                          std::size_t m, std::uint64_t seed, const std::string& opprf,
                          const std::string& ole, int lambda) {
    SessionConfig cfg;
    if (protocol == "et")
        cfg.protocol = Protocol::Et;
    else if (protocol == "st")
        cfg.protocol = Protocol::St;
    else
        throw ConfigError("unknown protocol: " + protocol);
    if (mode == "single")
        cfg.mode = FieldMode::Single;
    else if (mode == "crt")
        cfg.mode = FieldMode::Crt;
    else
        throw ConfigError("unknown field mode: " + mode);
    if (opprf == "ideal")
        cfg.opprf = OpprfBackend::Ideal;
    else if (opprf == "table")
        cfg.opprf = OpprfBackend::Table;
    else
        throw ConfigError("unknown opprf backend: " + opprf);
    if (ole == "ideal")
        cfg.ole = OleBackend::Ideal;
    else if (ole == "paillier")
        cfg.ole = OleBackend::Homomorphic;
    else
        throw ConfigError("unknown ole backend: " + ole);
    cfg.n = n;
    cfg.t = t;
    cfg.m = m;
    cfg.lambda = lambda;
    Prg prg(seed);
    prg.fill(cfg.seed.data(), cfg.seed.size());
    return cfg;
}

py::dict result_to_dict(const IntersectionResult& r) {
    py::dict d;
    d["protocol"] = r.protocol == Protocol::Et ? "et" : "st";
    d["n"] = r.n;
    d["t"] = r.t;
    py::list entries;
    for (const auto& e : r.entries) {
        py::dict ed;
        ed["element"] = to_hex(e.element);
        ed["count"] = e.count;
        ed["holders"] = e.holders;
        entries.append(ed);
    }
    d["intersection"] = entries;
    return d;
}

} // namespace

PYBIND11_MODULE(_totpsi, mod) {
    mod.doc() = "threshold multi-party PSI over a 128-bit prime field";

    mod.def("prime_hex", [] { return to_hex(kDefaultPrime); },
            "default field modulus, 2^128 - 159");

    mod.def(
        "derive_params",
        [](std::size_t m, int lambda) {
            BinParams p = derive_params(m, lambda);
            py::dict d;
            d["num_bins"] = p.m_b;
            d["beta"] = p.beta;
            d["lambda"] = p.lambda;
            return d;
        },
        py::arg("m"), py::arg("lambda_") = 40,
        "cuckoo/simple bin count and per-bin capacity for a set size");

    mod.def(
        "share",
        [](const std::string& secret, int t, int n, std::uint64_t seed) {
            Modulus mod_ = Modulus::default_prime();
            Prg prg(seed);
            auto shares = share_secret(mod_, from_hex(secret), t, n, prg);
            std::vector<std::pair<int, std::string>> out;
            for (const auto& s : shares) out.emplace_back(s.x, to_hex(s.y));
            return out;
        },
        py::arg("secret"), py::arg("t"), py::arg("n"), py::arg("seed"),
        "Shamir-share a secret; returns [(x, y_hex)] for parties 0..n-1");

    mod.def(
        "reconstruct",
        [](const std::vector<std::pair<int, std::string>>& points) {
            Modulus mod_ = Modulus::default_prime();
            std::vector<Share> shares;
            for (const auto& [x, y] : points)
                shares.push_back({static_cast<std::uint8_t>(x), from_hex(y)});
            return to_hex(lagrange_at(mod_, shares, 0));
        },
        py::arg("shares"), "interpolate the secret from >= t shares");

    mod.def(
        "ideal_intersection",
        [](const std::vector<std::vector<std::string>>& sets, int t) {
            PlainInstance inst;
            inst.sets = sets_from_hex(sets);
            inst.t = t;
            return result_to_dict(ideal_intersection(inst));
        },
        py::arg("sets"), py::arg("t"),
        "plaintext oracle: leader elements held by >= t parties, with holders");

    mod.def(
        "simulate",
        [](const std::string& protocol, const std::vector<std::vector<std::string>>& sets,
           int t, std::uint64_t seed, const std::string& mode, const std::string& opprf,
           const std::string& ole, int lambda) {
            auto plain = sets_from_hex(sets);
            std::size_t m = 1;
            for (const auto& s : plain) m = std::max(m, s.size());
            SessionConfig cfg = make_config(protocol, mode, static_cast<int>(plain.size()), t,
                                            m, seed, opprf, ole, lambda);
            auto outcome = simulate(cfg, plain);
            return result_to_dict(outcome.result);
        },
        py::arg("protocol"), py::arg("sets"), py::arg("t"), py::arg("seed"),
        py::arg("mode") = "single", py::arg("opprf") = "ideal", py::arg("ole") = "ideal",
        py::arg("lambda_") = 40,
        "run all parties in-process; sets[0] is the leader's; returns the result dict");

    mod.def(
        "gen_instance",
        [](int n, int t, std::size_t m, std::uint64_t seed,
           const std::optional<std::vector<int>>& plan) {
            auto inst = gen_instance(n, t, m, seed, Modulus::default_prime(), plan);
            std::vector<std::vector<std::string>> out;
            for (const auto& s : inst.sets) {
                std::vector<std::string> row;
                for (u128 e : s) row.push_back(to_hex(e));
                out.push_back(std::move(row));
            }
            return out;
        },
        py::arg("n"), py::arg("t"), py::arg("m"), py::arg("seed"),
        py::arg("plan") = std::nullopt,
        "deterministic planted instance; plan[k] = holder count of leader element k");

    py::register_exception<Error>(mod, "TotpsiError");
}
