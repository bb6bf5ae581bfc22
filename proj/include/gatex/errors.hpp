#pragma once

#include <stdexcept>
#include <string>

namespace gatex {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CSV / input problems
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Assumption-1 style failures: a dataset lacks rows for a required group
struct SupportError : Error { using Error::Error; };

// model fitting
struct DegenerateFitError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct FoldError : Error { using Error::Error; };

struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, double grad_norm)
        : Error(msg), grad_norm(grad_norm) {}
    double grad_norm;
};

// estimation
struct EstimationError : Error { using Error::Error; };
struct TransportError : Error { using Error::Error; };
struct DegenerateVarianceError : Error { using Error::Error; };
struct MetaError : Error { using Error::Error; };
struct OracleError : Error { using Error::Error; };

} // namespace gatex
