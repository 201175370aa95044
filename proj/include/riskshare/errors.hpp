#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace riskshare {

// Invalid inputs: arguments outside their documented domain, malformed
// configuration, shapes a closed-form routine does not cover.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A closed-form routine was called on parameters outside its hypotheses.
// The message carries the thresholds that were violated.
class PreconditionError : public DomainError {
public:
    explicit PreconditionError(const std::string& what) : DomainError(what) {}
};

// An economy agent is neither risk averse nor risk seeking, so the
// two-representative reduction does not apply.
class ClassificationError : public DomainError {
public:
    explicit ClassificationError(const std::string& what) : DomainError(what) {}
};

// Requested enumeration exceeds the configured candidate budget.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, std::uint64_t required_budget)
        : std::runtime_error(what), required(required_budget) {}
    std::uint64_t required;
};

} // namespace riskshare
