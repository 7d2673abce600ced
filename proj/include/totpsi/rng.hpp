#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "totpsi/field.hpp"

namespace totpsi {

// Deterministic, seedable generator (ChaCha20 keystream). Every source of
// protocol randomness is injected as a Prg so runs are replayable in tests.
class Prg {
  public:
    using Seed = std::array<std::uint8_t, 32>;

    explicit Prg(const Seed& seed);
    explicit Prg(std::uint64_t seed); // expands via hash

    static Seed random_seed();

    void fill(void* out, std::size_t len);
    std::uint64_t next_u64();
    u128 next_u128();
    // Uniform in [0, m.p()) by rejection sampling.
    u128 uniform(const Modulus& m);
    // Uniform in [0, bound).
    std::uint64_t uniform_u64(std::uint64_t bound);

    // Domain-separated child generator; deterministic in (seed, label).
    Prg child(const std::string& label) const;

  private:
    Seed key_;
    std::uint64_t block_ = 0;
    std::array<std::uint8_t, 64> buf_;
    std::size_t pos_ = 64;
    void refill();
};

} // namespace totpsi
