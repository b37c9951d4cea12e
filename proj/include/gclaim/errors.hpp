#pragma once

#include <stdexcept>
#include <string>

namespace gclaim {

/// Base class for all engine errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One-step transition probabilities fall outside [0,1].
struct InvalidStencil : Error {
    using Error::Error;
};

/// No valid lattice/grid exists for the requested discretization.
struct InvalidGrid : Error {
    using Error::Error;
};

/// Node index outside the lattice.
struct IndexOutOfRange : Error {
    using Error::Error;
};

/// Input surface fails the G-supermartingale precondition.
struct NotSupermartingale : Error {
    NotSupermartingale(const std::string& msg, int step, int node, double violation)
        : Error(msg), step(step), node(node), violation(violation) {}
    int step;
    int node;
    double violation;
};

/// Enumeration request exceeds the configured budget.
struct TooLarge : Error {
    using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
struct NoConvergence : Error {
    NoConvergence(const std::string& msg, int step, int iteration, double residual)
        : Error(msg), step(step), iteration(iteration), residual(residual) {}
    int step;
    int iteration;
    double residual;
};

/// Run configuration failed validation (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace gclaim
