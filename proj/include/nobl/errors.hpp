#pragma once

#include <stdexcept>
#include <string>

namespace nobl {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// config/input validation -> 2, data generation -> 3, training -> 4, I/O -> 5.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid operation inputs or malformed/out-of-range configuration.
class config_error : public error {
public:
    using error::error;
};

// Failures while producing reference data (ensemble generation, simulation
// blow-ups, dataset assembly).
class generation_error : public error {
public:
    using error::error;
};

// Failures inside an optimization run (non-finite gradients, bad dataset
// preconditions for a loss term).
class training_error : public error {
public:
    using error::error;
};

// Filesystem and serialization failures, including corrupt or truncated
// artifact files.
class io_error : public error {
public:
    using error::error;
};

} // namespace nobl
