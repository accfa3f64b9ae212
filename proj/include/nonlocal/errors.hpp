#pragma once

#include <stdexcept>
#include <string>

namespace nonlocal {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error { using Error::Error; };
class SingularityError : public Error { using Error::Error; };
class BoundaryBlowupError : public Error { using Error::Error; };
class ProbeError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class LimitFailure : public Error { using Error::Error; };
class BiasError : public Error { using Error::Error; };
class ContractionFailure : public Error { using Error::Error; };
class SupersolutionBreach : public Error { using Error::Error; };

// Raised when an integral or criterion is found to be infinite.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::string criterion = {})
        : Error(what), criterion_(std::move(criterion)) {}
    const std::string& criterion() const noexcept { return criterion_; }

private:
    std::string criterion_;
};

// Quadrature ran out of evaluations; carries the best estimate seen.
class BudgetError : public Error {
public:
    BudgetError(const std::string& what, double best, double err)
        : Error(what), best_(best), err_(err) {}
    double best_estimate() const noexcept { return best_; }
    double error_estimate() const noexcept { return err_; }

private:
    double best_;
    double err_;
};

// Iteration stopped at k_max; the caller may still inspect the partial trace.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double last_diff)
        : Error(what), iterations_(iterations), last_diff_(last_diff) {}
    int iterations() const noexcept { return iterations_; }
    double last_diff() const noexcept { return last_diff_; }

private:
    int iterations_;
    double last_diff_;
};

}  // namespace nonlocal
