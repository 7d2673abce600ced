#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "totpsi/field.hpp"
#include "totpsi/paillier.hpp"
#include "totpsi/rng.hpp"

namespace totpsi {

enum class OleBackend : std::uint8_t {
    Ideal = 1,       // in-process trusted evaluation for tests / fast simulation
    Homomorphic = 2, // receiver encrypts x under Paillier, sender replies Enc(a*x + b + mask*p)
};

using Bytes = std::vector<std::uint8_t>;

struct OleSenderInput {
    u128 a; // slope
    u128 b; // offset
};

struct OleBatch {
    std::vector<u128> slopes;
    std::vector<u128> offsets;
    std::vector<u128> inputs;
};

// Receiver-side state for a session; the Paillier keypair is generated once
// and reused across exchanges with every sender peer.
class OleReceiverSession {
  public:
    OleReceiverSession(OleBackend backend, const Modulus& mod, Prg& prg);

    Bytes request(const std::vector<u128>& xs, Prg& prg) const;
    std::vector<u128> finish(const Bytes& response) const;

    OleBackend backend() const { return backend_; }

  private:
    OleBackend backend_;
    Modulus mod_{2};
    std::shared_ptr<PaillierKeyPair> keys_;
};

// Sender side is stateless: consumes a request blob, emits the response.
Bytes ole_respond(const Modulus& mod, const Bytes& request,
                  const std::vector<u128>& slopes, const std::vector<u128>& offsets,
                  Prg& prg);

// Whole exchange in-process; the per-operation surface of the contract.
u128 ole_eval(OleBackend backend, const Modulus& mod, const OleSenderInput& sender, u128 x,
              Prg& prg);
std::vector<u128> ole_batch(OleBackend backend, const Modulus& mod, const OleBatch& batch,
                            Prg& prg);

} // namespace totpsi
