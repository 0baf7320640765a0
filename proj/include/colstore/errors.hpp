#pragma once

#include <stdexcept>
#include <string>

namespace colstore {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidFanout : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct DuplicateKey : Error {
    using Error::Error;
};
struct KeyNotFound : Error {
    using Error::Error;
};
struct UnsortedInput : Error {
    using Error::Error;
};
struct OverlapViolation : Error {
    using Error::Error;
};
struct InsufficientRetention : Error {
    using Error::Error;
};
struct PrunedRange : Error {
    using Error::Error;
};
struct MalformedBytes : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct DuplicateWrite : Error {
    using Error::Error;
};
struct ReorgBlocked : Error {
    using Error::Error;
};
struct RewindTooDeep : Error {
    using Error::Error;
};
struct NoCheckpointBeforeRewind : Error {
    using Error::Error;
};
struct CorruptCheckpoint : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};

}  // namespace colstore
