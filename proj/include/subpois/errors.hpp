#pragma once

#include <stdexcept>
#include <string>

namespace subpois {

// Every failure raised by the library derives from Error so callers (and the
// CLI exit-code mapping) can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid family parameters (alpha outside (0,1), theta <= 0, ...).
class ParameterDomainError : public Error {
public:
    using Error::Error;
};

// Arguments outside an operation's domain (s >= t, r > k, unordered times).
class DomainError : public Error {
public:
    using Error::Error;
};

// Misuse of an operation contract, e.g. asking for the 0-th derivative.
class ContractError : public Error {
public:
    using Error::Error;
};

class DivergentIntegralError : public Error {
public:
    using Error::Error;
};

// Requested index above the configured hard cap.
class CapError : public Error {
public:
    using Error::Error;
};

class AccuracyError : public Error {
public:
    using Error::Error;
};

// Alternating series rejected by the cancellation guard.
class CancellationLossError : public Error {
public:
    using Error::Error;
};

class InfiniteMomentError : public Error {
public:
    using Error::Error;
};

// A rejection loop ran out of trials. `analytic_probability` carries the
// acceptance probability when one is known (negative otherwise).
class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& what, double analytic_probability = -1.0)
        : Error(what), analytic_probability_(analytic_probability) {}

    double analytic_probability() const noexcept { return analytic_probability_; }

private:
    double analytic_probability_;
};

class BinningError : public Error {
public:
    using Error::Error;
};

} // namespace subpois
