#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riskshare/sharing.hpp"

namespace riskshare {

enum class Attitude { Averse, Seeking, Other };

std::string to_string(Attitude a);

// Shape-based classification; weakly linear agents count as averse.
Attitude classify_agent(const DistortionFn& h, int grid_size = kDefaultGrid);

struct EconomyAgent {
    std::string id;
    DistortionFn h;
    // Declared attitude; validated against the shape of h. Other is rejected
    // by the reduction.
    Attitude attitude = Attitude::Other;
};

// n agents sharing a nonnegative total risk.
struct Economy {
    std::vector<EconomyAgent> agents;
    LatticeRV risk;
};

// Convenience: classify every agent from its shape.
Economy make_economy(std::vector<DistortionFn> agents, LatticeRV risk,
                     int grid_size = kDefaultGrid);

// Two representative functions: the pointwise minimum over the risk-averse
// group and the inf-convolution over the risk-seeking group (bounded
// variation; seeking_scale = seeking_rep(1)).
struct Reduction {
    std::vector<int> averse;  // agent indices
    std::vector<int> seeking;
    std::optional<DistortionFn> averse_rep;
    std::optional<DistortionFn> seeking_rep;
    std::optional<DistortionFn> seeking_rep_hat; // seeking_rep / seeking_scale
    double seeking_scale = 0.0;
    // True when the seeking representative is an exact piecewise-linear merge
    // (all-convex piecewise-linear group) rather than a sampled fold.
    bool seeking_exact = true;
};

Reduction reduce(const Economy& eco, int grid_size = kDefaultGrid);

// Full n-agent solve: reduce to two representatives, solve the two-agent
// problem, re-expand (layered assignment within the averse group, disjoint
// stacked events within the seeking group), and verify the dependence
// structure. The returned allocation has one part per economy agent, in
// order; the note records the comonotone / counter-monotone verification.
SharingSolution solve_n(const Economy& eco, const SolveOptions& opts = {});

// Closed form for shortfall-type averse agents (levels b_list) plus
// flat-type seeking agents (widths a_list) sharing X: the optimal value is
// rho of a single piecewise-linear composite. Allocation order: averse
// agents first (b_list order), then seeking agents (a_list order). Throws
// PreconditionError on parameters outside the two hypotheses.
SharingSolution pwl_n_agent(const std::vector<double>& b_list,
                            const std::vector<double>& a_list,
                            const LatticeRV& x, const SolveOptions& opts = {});

// The composite distortion whose rho gives the pwl_n_agent value; exposed
// for direct inspection. b = max(b_list), flat head of width sum(a_list),
// then one linear piece: slope 1/(1 - min(a_list)) when min(a)+b <= 1,
// slope 1/b otherwise.
DistortionFn pwl_group_composite(const std::vector<double>& b_list,
                                 const std::vector<double>& a_list);

} // namespace riskshare
