#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qstirap {

inline constexpr const char* kVersion = "0.1.0";

using cplx = std::complex<double>;

/// Malformed input (bad dimensions, invalid indices, out-of-range parameters).
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (eigensolver breakdown, trajectory blow-up).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Root solver did not converge; carries the last residual seen.
struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& what, double residual)
        : NumericError(what), last_residual(residual) {}
    double last_residual;
};

}  // namespace qstirap
