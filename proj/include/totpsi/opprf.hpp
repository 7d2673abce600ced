#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "totpsi/field.hpp"
#include "totpsi/oprf.hpp"
#include "totpsi/rng.hpp"

namespace totpsi {

enum class OpprfBackend : std::uint8_t {
    Ideal = 1, // in-process trusted evaluation; correctness tests and fast simulation
    Table = 2, // table construction over the blind-evaluation OPRF, mod-p combination
};

struct ProgrammedPoints {
    std::vector<std::pair<u128, u128>> points; // (x, y), x distinct
    std::uint32_t capacity;                    // bound u; transcript size depends only on this
};

using Bytes = std::vector<std::uint8_t>;

// Message flow per instance:
//   receiver: start() -> request() (empty for the ideal backend)
//   sender:   program() -> respond(request)
//   receiver: finish(response) -> field element
// Programmed x yield the programmed y; everything else is pseudorandom in
// the value modulus. Outputs combine additively mod p on program and
// subtractively on query, so every output is a canonical field element.
class OpprfProgram {
  public:
    static OpprfProgram make(OpprfBackend backend, const Modulus& value_mod,
                             const ProgrammedPoints& points, std::uint32_t session,
                             Prg& prg);

    Bytes respond(const Bytes& request) const;

  private:
    OpprfBackend backend_;
    Modulus value_mod_{2};
    std::uint32_t session_ = 0;
    // ideal
    Bytes ideal_hint_;
    // table
    Scalar oprf_key_{};
    Bytes table_hint_;
};

class OpprfQuery {
  public:
    static OpprfQuery start(OpprfBackend backend, const Modulus& value_mod, u128 q,
                            std::uint32_t session, Prg& prg);

    Bytes request() const;
    u128 finish(const Bytes& response) const;

  private:
    OpprfBackend backend_;
    Modulus value_mod_{2};
    std::uint32_t session_ = 0;
    u128 q_ = 0;
    OprfBlinded blinded_{};
};

// Table size for capacity u: smallest power of two >= max(u + 1, 2u).
std::uint32_t opprf_table_size(std::uint32_t capacity);

} // namespace totpsi
