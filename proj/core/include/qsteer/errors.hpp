#pragma once

#include <stdexcept>
#include <string>

namespace qsteer {

// Every failure raised by the library derives from Error.  The category
// decides the CLI exit code: input/configuration problems exit with 2,
// numerical and convergence problems with 3.
enum class ErrorCategory { Validation, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string kind, const std::string& message)
        : std::runtime_error(message), category_(category), kind_(std::move(kind)) {}

    ErrorCategory category() const noexcept { return category_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    ErrorCategory category_;
    std::string kind_;
};

struct InputError : Error {
    explicit InputError(const std::string& message)
        : Error(ErrorCategory::Validation, "input", message) {}
};

struct ConfigurationError : Error {
    explicit ConfigurationError(const std::string& message)
        : Error(ErrorCategory::Validation, "configuration", message) {}
};

struct InsufficientDataError : Error {
    explicit InsufficientDataError(const std::string& message)
        : Error(ErrorCategory::Validation, "insufficient_data", message) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& message)
        : Error(ErrorCategory::Numerical, "numerical", message) {}
};

struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& message)
        : Error(ErrorCategory::Numerical, "convergence", message) {}
};

struct SearchHorizonError : Error {
    SearchHorizonError(const std::string& message, double best_residual, double best_time)
        : Error(ErrorCategory::Numerical, "search_horizon", message),
          best_residual(best_residual), best_time(best_time) {}
    double best_residual;
    double best_time;
};

// A structural hypothesis of the controllability theory fails for the data
// at hand (vanishing coupling, resonant frequencies, degenerate anchor).
struct ConditionError : Error {
    ConditionError(std::string condition, const std::string& message)
        : Error(ErrorCategory::Validation, "condition", message), condition(std::move(condition)) {}
    std::string condition;
};

struct NotInvertibleError : ConditionError {
    NotInvertibleError(const std::string& message, int p, int q, double balance)
        : ConditionError("not_invertible", message), p(p), q(q), balance(balance) {}
    int p;
    int q;
    double balance;
};

} // namespace qsteer
