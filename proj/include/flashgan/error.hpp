#pragma once

#include <stdexcept>
#include <string>

namespace flashgan {

// Error taxonomy; the CLI maps these onto exit codes.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Valid request, but the data cannot satisfy it (empty class, nothing to add, ...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Retry budget exhausted (subgraph collection, augmentation).
struct StallError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse (non-scalar loss, shape registry violations).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace flashgan
