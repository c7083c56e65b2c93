#pragma once

#include <stdexcept>
#include <string>

namespace crh {

// All recoverable failures are thrown as subclasses of Error so callers
// (and the CLI exit-code mapping) can distinguish bad input from
// numerical trouble.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user-supplied data (CLI maps these to exit code 2).
struct InvalidInput : Error {
    using Error::Error;
};

struct InadmissibleSpec : InvalidInput {
    using InvalidInput::InvalidInput;
};
struct DegreeCapExceeded : InvalidInput {
    using InvalidInput::InvalidInput;
};
struct GridMismatch : InvalidInput {
    using InvalidInput::InvalidInput;
};
struct PointNotInterior : InvalidInput {
    using InvalidInput::InvalidInput;
};
struct TooFewSamples : InvalidInput {
    using InvalidInput::InvalidInput;
};
struct PointTooCloseToBoundary : InvalidInput {
    using InvalidInput::InvalidInput;
};
struct UnsupportedDomain : InvalidInput {
    using InvalidInput::InvalidInput;
};

// Numerical failures (CLI maps these to exit code 3).
struct NumericalFailure : Error {
    using Error::Error;
};

struct CascadeDiverged : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};
struct GridTooCoarse : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};
struct GridUnderResolved : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};
struct NotSliceExtendible : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};

}  // namespace crh
