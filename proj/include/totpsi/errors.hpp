#pragma once

#include <stdexcept>
#include <string>

namespace totpsi {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRange : Error {
    using Error::Error;
};
struct ZeroInverse : Error {
    ZeroInverse() : Error("inverse of zero") {}
};
struct BadThreshold : Error {
    using Error::Error;
};
struct DuplicateX : Error {
    using Error::Error;
};
struct InsertionFailure : Error {
    using Error::Error;
};
struct BinOverflow : Error {
    using Error::Error;
};
struct CapacityExceeded : Error {
    using Error::Error;
};
struct SessionMismatch : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct BackendFailure : Error {
    using Error::Error;
};
struct Timeout : Error {
    using Error::Error;
};
struct PeerDisconnect : Error {
    using Error::Error;
};
struct MalformedFrame : Error {
    using Error::Error;
};
struct ProtocolAbort : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

} // namespace totpsi
