#pragma once

#include <string>
#include <vector>

#include "totpsi/field.hpp"
#include "totpsi/hashing.hpp"
#include "totpsi/ole.hpp"
#include "totpsi/opprf.hpp"
#include "totpsi/rng.hpp"
#include "totpsi/transport.hpp"

namespace totpsi {

enum class Protocol : std::uint8_t { Et = 1, St = 2 };
enum class FieldMode : std::uint8_t { Single = 1, Crt = 2 };

struct SessionConfig {
    Protocol protocol = Protocol::Et;
    FieldMode mode = FieldMode::Single;
    int n = 3;
    int t = 2;
    int self = 0;
    std::size_t m = 8;
    int lambda = 40;
    u128 prime = kDefaultPrime;
    std::array<std::uint32_t, 4> crt_primes = kDefaultCrtPrimes;
    OpprfBackend opprf = OpprfBackend::Ideal;
    OleBackend ole = OleBackend::Ideal;
    double timeout_secs = 60.0;
    Prg::Seed seed{};      // local randomness; never shared
    bool pad_bins = true;  // test hook: Simple-side padding on/off

    void validate() const; // throws ConfigError
    // Modulus protocol secrets live in: the prime, or the CRT product.
    Modulus modulus() const;
    // OPPRF/OLE value channels: {modulus()} or one per CRT prime.
    std::vector<Modulus> channels() const;
};

struct IntersectionEntry {
    u128 element;
    int count;
    std::vector<int> holders; // ascending, always contains 0
};

struct IntersectionResult {
    Protocol protocol = Protocol::Et;
    int n = 0;
    int t = 0;
    std::vector<IntersectionEntry> entries; // sorted by element

    std::string to_json() const;
    bool operator==(const IntersectionResult& o) const;
};

struct PhaseTimings {
    double share_wall = 0, share_cpu = 0;
    double recon_wall = 0, recon_cpu = 0;
    double total_wall = 0;
};

// Result of the seed-agreement handshake: identical seeds/params everywhere
// plus this party's two bin layouts.
struct SessionContext {
    std::array<std::uint8_t, 16> session_id{};
    HashSeeds seeds;
    BinParams params{};
    CuckooTable cuckoo;
    SimpleTable simple;
};

// Leader broadcasts (params, nonce); every party builds its tables; a table
// failure anywhere triggers a fresh-nonce retry round (bounded).
SessionContext session_setup_leader(const SessionConfig& cfg, Comm& comm,
                                    const std::vector<u128>& set, Prg& prg);
SessionContext session_setup_client(const SessionConfig& cfg, Comm& comm,
                                    const std::vector<u128>& set);

// Large payloads travel as chunked frames: bin = channel, slot = chunk index,
// first chunk prefixed with the total length (u64 LE).
void send_blob(Comm& comm, std::uint8_t to, Phase phase, MsgKind kind,
               std::uint32_t channel, const Bytes& blob);
Bytes recv_blob(Comm& comm, std::uint8_t from, MsgKind kind, std::uint32_t channel);

// Length-prefixed record packing inside a blob (one record per bin).
void append_record(Bytes& blob, const Bytes& rec);
std::vector<Bytes> split_records(const Bytes& blob, std::size_t expected);

// Domain-separated 32-bit instance tag binding an OPPRF to (session, kind,
// pair, bin, channel).
std::uint32_t opprf_instance_tag(const std::array<std::uint8_t, 16>& session_id,
                                 MsgKind kind, std::uint8_t sender, std::uint8_t receiver,
                                 std::uint32_t bin, std::uint32_t channel);

// Broadcast Abort to every peer; swallows transport errors (best effort).
void abort_session(Comm& comm, const std::array<std::uint8_t, 16>& session_id);

// Programmed points for one bin: real entries first (authoritative y from
// `ys`, aligned with the bin), then dummies with fresh random y; duplicate x
// values are dropped. Capacity is always beta, so hint sizes stay
// input-independent.
ProgrammedPoints bin_points(const std::vector<SimpleEntry>& bin, const std::vector<u128>& ys,
                            std::uint32_t beta, const Modulus& channel_mod, Prg& prg);

double thread_cpu_secs();

} // namespace totpsi
