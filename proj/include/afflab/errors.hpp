#pragma once

#include <stdexcept>
#include <string>

namespace afflab {

/// Bad arguments or malformed data handed to an operation.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A mathematical precondition does not hold (e.g. a map is not a contraction).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An enumeration or memory budget would be exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace afflab
