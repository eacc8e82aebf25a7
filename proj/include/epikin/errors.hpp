#pragma once

#include <stdexcept>
#include <string>

namespace epikin {

// Base of all toolkit errors. Subclasses map onto CLI exit codes:
// input/parse problems -> 2, calibration problems -> 3, everything else -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (JSON, XML, codec grammar).
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input that violates a declared schema (e.g. wrong
// keypoint count for the selected skeleton layout).
class SchemaError : public ParseError {
public:
    using ParseError::ParseError;
};

// A parameter value outside its documented domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A lookup that legitimately found nothing (subject outside region, tier absent).
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Per-frame angle estimation failure (missing keypoint, degenerate geometry).
class EstimationError : public Error {
public:
    using Error::Error;
};

// Calibration landmark ordering or lookup failures.
class CalibrationError : public Error {
public:
    using Error::Error;
};

// Two series or a series/profile pair that do not belong together.
class MismatchError : public Error {
public:
    using Error::Error;
};

// An output value that violates its own invariants (overlapping tier
// annotations, ill-ordered intervals).
class ValidityError : public Error {
public:
    using Error::Error;
};

// A broken internal invariant; reaching this is a bug.
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace epikin
