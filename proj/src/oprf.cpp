#include "totpsi/oprf.hpp"

#include <cstring>
#include <sodium.h>

namespace totpsi {

namespace {

GroupElement hash_to_group(u128 x) {
    std::uint8_t msg[16 + 14];
    u128_to_le_bytes(x, msg);
    std::memcpy(msg + 16, "totpsi.oprf.h1", 14);
    std::uint8_t h[64];
    crypto_hash_sha512(h, msg, sizeof(msg));
    GroupElement p;
    crypto_core_ristretto255_from_hash(p.data(), h);
    return p;
}

} // namespace

Scalar oprf_keygen(Prg& prg) {
    std::uint8_t wide[64];
    prg.fill(wide, sizeof(wide));
    Scalar k;
    crypto_core_ristretto255_scalar_reduce(k.data(), wide);
    return k;
}

GroupElement oprf_eval(const Scalar& key, u128 x) {
    GroupElement base = hash_to_group(x);
    GroupElement out;
    if (crypto_scalarmult_ristretto255(out.data(), key.data(), base.data()) != 0)
        throw BackendFailure("oprf_eval: scalar mult failed");
    return out;
}

OprfBlinded oprf_blind(u128 q, Prg& prg) {
    OprfBlinded state;
    std::uint8_t wide[64];
    do {
        prg.fill(wide, sizeof(wide));
        crypto_core_ristretto255_scalar_reduce(state.rho.data(), wide);
    } while (sodium_is_zero(state.rho.data(), state.rho.size()));
    GroupElement base = hash_to_group(q);
    if (crypto_scalarmult_ristretto255(state.point.data(), state.rho.data(), base.data()) != 0)
        throw BackendFailure("oprf_blind: scalar mult failed");
    return state;
}

GroupElement oprf_respond(const Scalar& key, const GroupElement& blinded) {
    GroupElement out;
    if (crypto_scalarmult_ristretto255(out.data(), key.data(), blinded.data()) != 0)
        throw BackendFailure("oprf_respond: invalid group element");
    return out;
}

GroupElement oprf_unblind(const OprfBlinded& state, const GroupElement& response) {
    Scalar inv;
    if (crypto_core_ristretto255_scalar_invert(inv.data(), state.rho.data()) != 0)
        throw BackendFailure("oprf_unblind: non-invertible blind");
    GroupElement out;
    if (crypto_scalarmult_ristretto255(out.data(), inv.data(), response.data()) != 0)
        throw BackendFailure("oprf_unblind: invalid group element");
    return out;
}

} // namespace totpsi
