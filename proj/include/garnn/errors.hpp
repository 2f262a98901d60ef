#pragma once

#include <stdexcept>
#include <string>

namespace garnn {

/// Argument outside the documented domain of an operation (bad support,
/// mismatched dimensions, malformed configuration).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A mean or linear predictor left the admissible region of the family/link.
/// The optimizer treats this as an infinite objective; callers outside the
/// optimizer see it as rejected input.
class DomainError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Numerical procedure could not produce a usable answer.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace garnn
