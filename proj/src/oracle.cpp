#include "totpsi/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace totpsi {

IntersectionResult ideal_intersection(const PlainInstance& inst) {
    const int n = static_cast<int>(inst.sets.size());
    if (inst.t <= 1 || inst.t > n) throw BadThreshold("threshold must satisfy 1 < t <= n");

    std::vector<std::unordered_set<u128, U128Hash>> members;
    members.reserve(static_cast<std::size_t>(n));
    for (const auto& s : inst.sets) members.emplace_back(s.begin(), s.end());

    IntersectionResult result;
    result.protocol = Protocol::Et;
    result.n = n;
    result.t = inst.t;
    for (u128 e : inst.sets[0]) {
        IntersectionEntry entry;
        entry.element = e;
        for (int i = 0; i < n; ++i)
            if (members[static_cast<std::size_t>(i)].count(e)) entry.holders.push_back(i);
        entry.count = static_cast<int>(entry.holders.size());
        if (entry.count >= inst.t) result.entries.push_back(std::move(entry));
    }
    std::sort(result.entries.begin(), result.entries.end(),
              [](const IntersectionEntry& a, const IntersectionEntry& b) {
                  return a.element < b.element;
              });
    return result;
}

PlainInstance gen_instance(int n, int t, std::size_t m, std::uint64_t seed,
                           const Modulus& mod,
                           const std::optional<std::vector<int>>& plan) {
    if (n < 2 || t <= 1 || t > n) throw BadThreshold("invalid (n, t)");
    if (plan && plan->size() != m) throw ConfigError("plan length must equal m");
    Prg prg(seed);
    std::unordered_set<u128, U128Hash> used;
    auto fresh = [&] {
        for (;;) {
            u128 e = prg.uniform(mod);
            if (used.insert(e).second) return e;
        }
    };

    PlainInstance inst;
    inst.t = t;
    inst.sets.assign(static_cast<std::size_t>(n), {});
    for (std::size_t k = 0; k < m; ++k) {
        u128 e = fresh();
        int count;
        if (plan) {
            count = (*plan)[k];
        } else {
            count = t - 1 + static_cast<int>(prg.uniform_u64(3));
        }
        count = std::clamp(count, 1, n);
        inst.sets[0].push_back(e);
        // holders beyond the leader: a uniform (count-1)-subset of the clients
        std::vector<int> clients;
        for (int i = 1; i < n; ++i) clients.push_back(i);
        for (std::size_t i = clients.size(); i > 1; --i)
            std::swap(clients[i - 1], clients[prg.uniform_u64(i)]);
        for (int c = 0; c < count - 1; ++c)
            inst.sets[static_cast<std::size_t>(clients[static_cast<std::size_t>(c)])]
                .push_back(e);
    }
    for (auto& s : inst.sets)
        while (s.size() < m) s.push_back(fresh());
    return inst;
}

std::vector<u128> read_set_file(const std::string& path, const Modulus& mod) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open set file: " + path);
    std::vector<u128> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        auto end = line.find_last_not_of(" \t\r");
        std::string token = line.substr(begin, end - begin + 1);
        if (token.size() != 34 || token[0] != '0' || (token[1] != 'x' && token[1] != 'X'))
            throw ConfigError("set file line is not a 0x-prefixed 128-bit element: " + token);
        std::uint8_t bytes[16];
        u128 v = u128_from_hex(token.substr(2));
        u128_to_le_bytes(v, bytes);
        out.push_back(mod.reduce_element(bytes));
    }
    return out;
}

void write_set_file(const std::string& path, const std::vector<u128>& set) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write set file: " + path);
    for (u128 e : set) out << "0x" << u128_to_hex(e) << "\n";
}

} // namespace totpsi
