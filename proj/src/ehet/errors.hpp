#pragma once

#include <stdexcept>
#include <string>

namespace ehet {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Psi construction failed (degenerate or non-monotone curve).
class ConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a precondition the library cannot repair (e.g. an infeasible action).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Offline plan that cannot be executed; carries the 1-based slot of the first violation.
class InfeasiblePlan : public std::runtime_error {
public:
    InfeasiblePlan(int slot, const std::string& what)
        : std::runtime_error("slot " + std::to_string(slot) + ": " + what), slot_(slot) {}
    int slot() const noexcept { return slot_; }

private:
    int slot_;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or config document; line is 0 when not applicable.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace ehet
