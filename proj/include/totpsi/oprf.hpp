#pragma once

#include <array>
#include <cstdint>

#include "totpsi/field.hpp"
#include "totpsi/rng.hpp"

namespace totpsi {

// Two-message blind-evaluation OPRF over ristretto255:
// F(k, x) = k * H1(x). The receiver blinds with a random scalar rho,
// sends rho * H1(q), and unblinds the sender's response with rho^-1.
using GroupElement = std::array<std::uint8_t, 32>;
using Scalar = std::array<std::uint8_t, 32>;

Scalar oprf_keygen(Prg& prg);

// Sender-side direct evaluation on its own inputs.
GroupElement oprf_eval(const Scalar& key, u128 x);

struct OprfBlinded {
    GroupElement point; // rho * H1(q), goes on the wire
    Scalar rho;
};

OprfBlinded oprf_blind(u128 q, Prg& prg);
GroupElement oprf_respond(const Scalar& key, const GroupElement& blinded);
GroupElement oprf_unblind(const OprfBlinded& state, const GroupElement& response);

} // namespace totpsi
