#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riskshare/distortion.hpp"
#include "riskshare/randvar.hpp"

namespace riskshare {

inline constexpr std::uint64_t kDefaultOracleBudget = 100000000ULL;

// Exhaustive minimization of sum_i rho(h_i, X_i) over per-atom gridded
// allocations: each agent's share of atom j is a multiple of value_j/levels,
// shares summing to value_j. Atoms with identical (probability, value) are
// interchangeable, so enumeration runs over multisets of per-atom splits
// within each such class; the candidate count below is that reduced count.
struct OracleProblem {
    std::vector<DistortionFn> hs;
    LatticeRV x;
    int levels = 10;
    std::uint64_t budget = kDefaultOracleBudget; // max candidates per run
};

struct OracleResult {
    double value = 0.0;
    std::optional<Allocation> argmin; // canonical (class-sorted) representative
    // Certificate: observed value change under grid refinement plus 1e-9;
    // refinements that exceed the budget fall back to a coarse comparison.
    double delta = 0.0;
    std::uint64_t candidates = 0; // canonical candidates enumerated
    std::string certificate;      // which refinements the delta compared
};

// Reduced candidate count for the full enumeration (budget precheck).
std::uint64_t oracle_candidate_count(const OracleProblem& p);

// Exact minimum over the discretized allocation set; deterministic
// tie-break to the first candidate in canonical order (atom-major,
// composition-minor). Throws BudgetError (with the required count) when the
// primary enumeration exceeds the budget.
OracleResult brute_min(const OracleProblem& p);

// Minima restricted to allocations passing the dependence predicate.
OracleResult enumerate_comonotone(const OracleProblem& p);
OracleResult enumerate_counter(const OracleProblem& p);

// True when brute_min(x_low) <= brute_min(x_high) + the larger delta;
// x_low must be atomwise <= x_high on the same probability space.
bool monotonicity_probe(const DistortionFn& h1, const DistortionFn& h2,
                        const LatticeRV& x_low, const LatticeRV& x_high,
                        int levels = 10,
                        std::uint64_t budget = kDefaultOracleBudget);

} // namespace riskshare
