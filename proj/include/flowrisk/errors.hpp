#pragma once

#include <stdexcept>
#include <string>

namespace flowrisk {

// Base class for everything this library throws. CLI maps subclasses to
// exit codes: input problems -> 1, non-convergence -> 2, timeline
// integrity -> 3.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (bad JSON, bad config line). Carries no position
// itself; readers prefix "<file>:<line>:".
class parse_error : public error {
public:
    using error::error;
};

// Structurally valid input missing a required field or using a wrong type.
class schema_error : public error {
public:
    using error::error;
};

// Field values violating a domain invariant.
class validation_error : public error {
public:
    using error::error;
};

class empty_input_error : public error {
public:
    using error::error;
};

class not_found_error : public error {
public:
    using error::error;
};

// Operation called on an object in the wrong lifecycle state
// (e.g. ranking an unfrozen graph, mutating a frozen one).
class state_error : public error {
public:
    using error::error;
};

class config_error : public error {
public:
    using error::error;
};

// Broken transition chain in a security timeline.
class integrity_error : public error {
public:
    using error::error;
};

// A rank iteration hit max_iterations before reaching tolerance.
class convergence_error : public error {
public:
    using error::error;
};

}  // namespace flowrisk
