#pragma once

#include <vector>

#include "riskshare/distortion.hpp"

namespace riskshare {

// The function-level infimal convolution w = h1 [] h2 [] ... [] hn evaluated
// on [0,1], together with the minimizing splits (the selector).
//
// Exact closed forms are used when available:
//  - one operand is a VaR indicator (pair): w(x) = other((x - alpha)+),
//    split (min(x, alpha), rest);
//  - both operands piecewise linear (pair): candidate search over knots,
//    smallest minimizing first share on ties;
//  - three or more operands, all convex piecewise linear: slope merge, with
//    the stacked split that consumes merged segments in slope order.
// Otherwise the curve is computed by a dynamic-programming fold over the
// uniform grid (index arithmetic, no drift), keeping the smallest minimizer.
class InfConvCurve {
public:
    static InfConvCurve build(std::vector<DistortionFn> hs, int grid_size = kDefaultGrid);

    int grid_size() const { return grid_size_; }
    int components() const { return static_cast<int>(components_.size()); }
    const std::vector<DistortionFn>& component_fns() const { return components_; }

    // w(x); exact on fast paths, linear interpolation on the grid otherwise.
    double value_at(double x) const;
    // w(x) improved by a local continuous polish of the last split (pairs on
    // the generic path); never below the true infimum, never above value_at.
    double refined_value_at(double x) const;
    double at_one() const { return value_at(1.0); }

    // Minimizing split (y_1, ..., y_n), summing to x (up to grid snap on the
    // generic path).
    std::vector<double> split_at(double x) const;
    // Split with the same polish as refined_value_at.
    std::vector<double> refined_split_at(double x) const;

    bool exact() const { return mode_ != Mode::GridFold; }
    // True when every component of the split is nondecreasing in x; this is
    // the certificate required by the layered two-agent construction.
    bool selector_monotone() const { return selector_monotone_; }

    const std::vector<double>& grid_values() const { return values_; }
    // Largest slope observed between consecutive grid values.
    double lipschitz_estimate() const;
    // Max deviation between this curve and a from-scratch grid fold; used to
    // cross-check the exact fast paths.
    double cross_check_deviation() const;

    // The curve as a DistortionFn (possibly bounded-variation): exact PWL on
    // the slope-merge path, tabulated otherwise.
    DistortionFn as_distortion() const;

private:
    enum class Mode { Single, VarPair, PwlPair, ConvexMerge, GridFold };

    InfConvCurve() = default;

    double exact_value(double x) const;
    std::vector<double> exact_split(double x) const;
    std::vector<double> fold_split(int j) const;
    void compute_fold(std::vector<double>& out,
                      std::vector<std::vector<int>>* args) const;

    Mode mode_ = Mode::GridFold;
    int grid_size_ = kDefaultGrid;
    std::vector<DistortionFn> components_;
    std::vector<double> values_;
    bool selector_monotone_ = false;

    // VarPair
    int var_index_ = 0;
    double var_alpha_ = 0.0;

    // PwlPair
    std::vector<std::pair<double, double>> knots_lhs_;
    std::vector<std::pair<double, double>> knots_rhs_;

    // ConvexMerge
    struct Segment { double slope; double length; int owner; };
    std::vector<Segment> merged_;
    std::vector<std::pair<double, double>> merged_knots_;

    // GridFold
    std::vector<std::vector<int>> args_;
};

InfConvCurve infconv_fn(const std::vector<DistortionFn>& hs,
                        int grid_size = kDefaultGrid);

} // namespace riskshare
