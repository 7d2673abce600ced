#pragma once

#include <cstdint>
#include <vector>

#include "totpsi/field.hpp"
#include "totpsi/rng.hpp"

namespace totpsi {

// Evaluation point of a sharing polynomial. x = party index + 1, never 0.
struct Share {
    std::uint8_t x;
    u128 y;
};

// Coefficients (a_0 .. a_{t-1}) of f(x) = a_0 + a_1 x + ... + a_{t-1} x^{t-1}.
struct SharingPolynomial {
    std::vector<u128> coefficients;

    u128 eval(const Modulus& m, u128 x) const;
};

struct TraceResult {
    bool secret_matched = false;
    std::vector<std::uint8_t> holders; // party indices, ascending
    SharingPolynomial reconstructed_poly;
};

// Shares of `secret` for parties 0..n-1 at x = 1..n, from a uniformly random
// degree-(<= t-1) polynomial.
std::vector<Share> share_secret(const Modulus& m, u128 secret, int t, int n, Prg& prg);

// Shares of the secret 0 (zero-share refresh).
std::vector<Share> zero_shares(const Modulus& m, int t, int n, Prg& prg);

std::vector<Share> eval_polynomial(const Modulus& m, const SharingPolynomial& poly, int n);

// Value at x0 of the unique polynomial of degree < |points| through `points`.
u128 lagrange_at(const Modulus& m, const std::vector<Share>& points, u128 x0);

// Full coefficient interpolation (needed for holder re-evaluation).
SharingPolynomial interpolate(const Modulus& m, const std::vector<Share>& points);

// Leader-side traced reconstruction: enumerate (t-1)-subsets of `others` in
// lexicographic order, always combined with own_share (x must be 1); on the
// first subset whose interpolation hits expected_secret at 0, decide holders
// by re-evaluating the matched polynomial against every candidate share.
TraceResult reconstruct_with_trace(const Modulus& m, const Share& own_share,
                                   const std::vector<Share>& others, int t,
                                   u128 expected_secret);

} // namespace totpsi
