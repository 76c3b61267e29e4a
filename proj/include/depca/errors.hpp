#pragma once

#include <stdexcept>
#include <string>

namespace depca {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration or precondition violation (usage error).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// A numeric hypothesis required by the method could not be verified.
/// CLI maps these to exit code 2.
struct HypothesisError : Error {
    explicit HypothesisError(const std::string& msg) : Error(msg) {}
};

/// The kernel matrix J(t,s) is numerically singular (condition estimate
/// above the configured ceiling).
struct NearSingularJ : HypothesisError {
    explicit NearSingularJ(const std::string& msg) : HypothesisError(msg) {}
};

/// No exponential dichotomy: an eigenvalue sits on (or too close to) the
/// unit circle, or the fitted decay bound is violated.
struct NoDichotomy : HypothesisError {
    explicit NoDichotomy(const std::string& msg) : HypothesisError(msg) {}
};

/// The fitted (alpha, K) pair violates the decay bound beyond tolerance.
struct FitRejected : NoDichotomy {
    explicit FitRejected(const std::string& msg) : NoDichotomy(msg) {}
};

/// The contraction factor is >= 1 at the requested (nu, r).
struct NoContraction : HypothesisError {
    explicit NoContraction(const std::string& msg) : HypothesisError(msg) {}
};

/// Fixed-point iteration failed to reach tolerance within max iterations.
struct NonConvergence : HypothesisError {
    explicit NonConvergence(const std::string& msg) : HypothesisError(msg) {}
};

/// Finite differencing of a user right-hand side produced non-finite values.
struct JacobianFailure : Error {
    explicit JacobianFailure(const std::string& msg) : Error(msg) {}
};

/// The requested computation needs a larger sequence window than supplied.
struct WindowTooSmall : Error {
    explicit WindowTooSmall(const std::string& msg) : Error(msg) {}
};

/// Integration or quadrature produced non-finite values.
struct NumericBlowup : Error {
    explicit NumericBlowup(const std::string& msg) : Error(msg) {}
};

}  // namespace depca
