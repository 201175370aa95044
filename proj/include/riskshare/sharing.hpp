#pragma once

#include <optional>
#include <string>
#include <utility>

#include "riskshare/distortion.hpp"
#include "riskshare/infconv.hpp"
#include "riskshare/randvar.hpp"

namespace riskshare {

// Which closed form (or fallback) produced a sharing solution.
enum class CaseTag {
    Unbounded,
    Mirror,
    ConcaveMin,
    ConvexDominated,
    VarLemma,
    PwlPair,
    Bernoulli,
    TwoIndicators,
    SmallProb,
    CoinSandwich,
    OracleOnly,
};

std::string to_string(CaseTag tag);

struct SolveOptions {
    int grid_size = kDefaultGrid;
    int dyadic_n = 10; // resolution of the layered construction
    double tol = kTol;
};

// Result of a two-agent (or reduced n-agent) sharing problem.
struct SharingSolution {
    // Optimal total risk value; -infinity when the problem is unbounded.
    double value = 0.0;
    bool neg_infinity = false;
    std::optional<Allocation> allocation;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    CaseTag method = CaseTag::OracleOnly;
    // True when value is certified optimal within tol on the given space.
    bool exact = false;
    // Distribution-level reference value (the atomless optimum); on coarse
    // lattices the achieved value may sit strictly above it.
    double benchmark = 0.0;
    // For Unbounded: the probability at which the existence criterion fails
    // worst, parameterizing the witness gamble family.
    std::optional<double> witness_prob;
    // Resolution 2^-n of the layered construction when one was used.
    double dyadic_gap = 0.0;
    std::string note;
};

// True when h1 >= dual(h2) - 1e-9 on the grid, i.e. the optimal total value
// over unbounded positions is finite.
bool check_existence(const DistortionFn& h1, const DistortionFn& h2,
                     int grid_size = kDefaultGrid);

// Optimal sharing over unconstrained bounded positions.
SharingSolution solve_linf(const DistortionFn& h1, const DistortionFn& h2,
                           const DiscreteRV& x, const SolveOptions& opts = {});

// Optimal sharing over nonnegative positions dominated by X. The lattice
// overload builds an explicit allocation on the given space and reports the
// achieved value (which may exceed the distribution-level benchmark when the
// space is too coarse); the distribution overload reports the atomless value.
// h1 must be normalized (h1(1) = 1); h2 may be a bounded-variation group
// representative with h2(1) <= 1.
SharingSolution solve_lplus(const DistortionFn& h1, const DistortionFn& h2,
                            const LatticeRV& x, const SolveOptions& opts = {});
SharingSolution solve_lplus(const DistortionFn& h1, const DistortionFn& h2,
                            const DiscreteRV& x, const SolveOptions& opts = {});

// Layered two-agent construction: splits each dyadic layer of X according to
// the curve's selector, producing nested events for both agents. Requires a
// monotone selector; throws DomainError otherwise.
Allocation coin_construct(const DistortionFn& h1, const DistortionFn& h2,
                          const LatticeRV& x, int dyadic_n = 10,
                          int grid_size = kDefaultGrid);

// Exact split of a Bernoulli layer between t^alpha and t^beta agents
// (1 < alpha < beta): returns (y*, x - y*), where y* is the first agent's
// share of the event probability x. Root solved to 1e-12.
std::pair<double, double> power_family_split(double alpha, double beta, double x);

// Closed form for a convex second agent when P(X > 0) is small; throws
// PreconditionError (with the violated thresholds) outside its hypotheses.
SharingSolution small_prob_case(const DistortionFn& h1, const DistortionFn& h2,
                                const LatticeRV& x, const SolveOptions& opts = {});

// Bounds for X = 1_A + c with P(A) = p: lower from the two Bernoulli
// relaxations, upper from the two-indicator construction.
std::pair<double, double> indicator_plus_constant_bounds(
    const DistortionFn& h1, const DistortionFn& h2, double p, double c,
    int grid_size = kDefaultGrid);

} // namespace riskshare
