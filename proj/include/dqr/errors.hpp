#pragma once

#include <stdexcept>
#include <string>

namespace dqr {

// Base class for all library errors so callers can catch dqr failures
// separately from std:: failures.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration: invalid thresholds, negative slot counts, malformed
// scenario or descriptor files.
struct ConfigError : Error {
    using Error::Error;
};

// Workload specification violations (zero components, absurd cut counts).
struct SpecError : Error {
    using Error::Error;
};

// A lifecycle event was applied to a fragment state that does not accept it.
struct IllegalTransition : Error {
    using Error::Error;
};

// schedule() was asked to place an event before the current virtual time.
struct TimeTravelError : Error {
    using Error::Error;
};

// advance() on an empty event queue.
struct QueueEmptyError : Error {
    using Error::Error;
};

// Ring traversal found every worker slot occupied.
struct NoFreeWorkerError : Error {
    using Error::Error;
};

// Reconstruction referenced a fragment id with no stored result.
struct MissingResultError : Error {
    using Error::Error;
};

// Metrics were requested over a trace that is missing terminal events,
// the run-complete marker, or the run-config header.
struct IncompleteTraceError : Error {
    using Error::Error;
};

}  // namespace dqr
