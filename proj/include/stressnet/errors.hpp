#pragma once

#include <stdexcept>
#include <string>

namespace stressnet {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file (carries a line number in the message where known).
struct ParseError : Error {
    using Error::Error;
};

/// Input violates a data invariant (duplicate ids, negative values, broken identities).
struct ValidationError : Error {
    using Error::Error;
};

/// A requested configuration cannot be satisfied (density above supremum,
/// unreachable bank after resampling, impossible generator parameters).
struct InfeasibleError : Error {
    using Error::Error;
};

} // namespace stressnet
