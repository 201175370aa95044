#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "riskshare/errors.hpp"

namespace riskshare {

// Default evaluation grid on [0,1]: 2001 nodes, so every multiple of 0.0005
// (hence every multiple of 0.05) is an exact grid point.
inline constexpr int kDefaultGrid = 2001;
// Default absolute tolerance for exact comparisons.
inline constexpr double kTol = 1e-9;

inline double grid_point(int i, int grid_size) {
    return static_cast<double>(i) / static_cast<double>(grid_size - 1);
}

class DistortionFn;

namespace detail {

struct PowerNode { double beta; };              // t^beta
struct DualPowerNode { double alpha; };         // 1 - (1-t)^alpha
struct PiecewiseLinearNode {
    std::vector<std::pair<double, double>> knots; // (x, h(x)), x increasing
};
struct VaRNode { double alpha; bool closed; };  // open: 1{t>alpha}, closed: 1{t>=alpha}
struct IdentityNode {};
struct TabulatedNode { std::vector<double> values; }; // uniform grid on [0,1]
// scale * base((t - offset)+)
struct ShiftedNode { std::shared_ptr<const DistortionFn> base; double offset; double scale; };
// 1 - base(1 - t)
struct DualOfNode { std::shared_ptr<const DistortionFn> base; };
// base(min(t + offset, 1)); removes a flat initial segment of width offset
struct ActivePartNode { std::shared_ptr<const DistortionFn> base; double offset; };

using FnNode = std::variant<PowerNode, DualPowerNode, PiecewiseLinearNode, VaRNode,
                            IdentityNode, TabulatedNode, ShiftedNode, DualOfNode,
                            ActivePartNode>;

} // namespace detail

// A distortion function h : [0,1] -> [0,inf), nondecreasing with h(0) = 0.
// Normalized members also satisfy h(1) = 1; intermediate algebra may produce
// bounded-variation members with h(1) != 1 (see normalize()).
class DistortionFn {
public:
    static DistortionFn power(double beta);
    static DistortionFn dual_power(double alpha);
    // knots must start at (0,0), end at x = 1, have strictly increasing x and
    // nondecreasing y.
    static DistortionFn piecewise_linear(std::vector<std::pair<double, double>> knots);
    static DistortionFn var_indicator(double alpha, bool closed = false);
    static DistortionFn identity();
    // values sampled on the uniform grid over [0,1]; must be nondecreasing
    // within 1e-9 (smaller dips are clamped) and start at 0.
    static DistortionFn tabulated(std::vector<double> values);
    // Expected shortfall distortion min{t/b, 1}.
    static DistortionFn expected_shortfall(double b);
    // Convex two-segment function max{0, (t-a)/(1-a)}.
    static DistortionFn flat_then_linear(double a);

    double operator()(double t) const;
    double at_one() const;

    const detail::FnNode& node() const { return *node_; }
    bool is_var() const;
    // Exact conversion to knot form when the function is piecewise linear
    // by construction (PiecewiseLinear or Identity nodes).
    std::optional<std::vector<std::pair<double, double>>> as_knots() const;
    std::string describe() const;

private:
    explicit DistortionFn(detail::FnNode node);
    std::shared_ptr<const detail::FnNode> node_;

    friend DistortionFn dual(const DistortionFn&);
    friend DistortionFn shift(const DistortionFn&, double);
    friend DistortionFn active_part(const DistortionFn&, int);
    friend std::pair<DistortionFn, double> normalize(const DistortionFn&);
    friend DistortionFn min_of(const std::vector<DistortionFn>&, int);
};

// h(t) with a domain check on t (tolerance 1e-12 at the endpoints).
double eval(const DistortionFn& h, double t);

// Dual distortion 1 - h(1-t). Exact on every family; an involution.
DistortionFn dual(const DistortionFn& h);

// Shape predicates. Analytic families answer exactly; sampled families use
// second differences on the grid with tolerance 1e-9.
bool is_concave(const DistortionFn& h, int grid_size = kDefaultGrid);
bool is_convex(const DistortionFn& h, int grid_size = kDefaultGrid);

// True when h1 >= dual(h2) - 1e-9 everywhere on the grid; this is the
// criterion for the pair (h1, h2) to admit a bounded optimal sharing value.
bool dominates(const DistortionFn& h1, const DistortionFn& h2,
               int grid_size = kDefaultGrid);

// Width of the initial flat segment: sup{ t : h == 0 on [0, t] }.
double alpha_of(const DistortionFn& h, int grid_size = kDefaultGrid);

// Removes the initial flat segment: t -> h(min(t + alpha, 1)).
DistortionFn active_part(const DistortionFn& h, int grid_size = kDefaultGrid);

// t -> h((t - a)+), the right shift that absorbs a value-at-risk layer.
DistortionFn shift(const DistortionFn& h, double a);

// Pointwise minimum. Exact (piecewise linear) when every input is piecewise
// linear; otherwise tabulated on the grid.
DistortionFn min_of(const std::vector<DistortionFn>& hs, int grid_size = kDefaultGrid);

// Scales h to h/h(1); returns the scaled function and the factor h(1).
// Throws DomainError when h(1) is ~0.
std::pair<DistortionFn, double> normalize(const DistortionFn& h);

// Grid equality within tol.
bool same_function(const DistortionFn& a, const DistortionFn& b,
                   double tol = 1e-12, int grid_size = kDefaultGrid);

} // namespace riskshare
