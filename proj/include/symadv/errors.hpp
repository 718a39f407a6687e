#pragma once

#include <stdexcept>
#include <string>

namespace symadv {

/// Malformed input: bad distributions, invalid paths, unparsable files.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An enumeration exceeded its configured node or model cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied component broke its contract, e.g. a selection filter
/// that returned no action (the advice was not strongly enforceable).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// CNF construction failed, e.g. the rules admit no path at all.
class EncodingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace symadv
