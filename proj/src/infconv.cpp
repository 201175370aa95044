#include "riskshare/infconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riskshare {

namespace {

constexpr double kEdgeTol = 1e-12;

double knot_eval(const std::vector<std::pair<double, double>>& knots, double t) {
    if (t <= knots.front().first) return knots.front().second;
    if (t >= knots.back().first) return knots.back().second;
    auto it = std::upper_bound(knots.begin(), knots.end(), t,
                               [](double v, const auto& k) { return v < k.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (t == lo.first) return lo.second;
    double w = (t - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
}

double check_domain(double x) {
    if (x < -kEdgeTol || x > 1.0 + kEdgeTol)
        throw DomainError("infconv curve: x outside [0, 1]");
    return std::clamp(x, 0.0, 1.0);
}

// Golden-section minimum of f on [lo, hi]; f must be continuous. Returns the
// best (y, f(y)) probed, which is always an upper bound for the infimum.
template <typename F>
std::pair<double, double> golden_min(F&& f, double lo, double hi) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 120 && (b - a) > 1e-14; ++it) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    double mid = 0.5 * (a + b);
    double fm = f(mid);
    if (fc < fm) { mid = c; fm = fc; }
    if (fd < fm) { mid = d; fm = fd; }
    return {mid, fm};
}

} // namespace

InfConvCurve InfConvCurve::build(std::vector<DistortionFn> hs, int grid_size) {
    if (hs.empty()) throw DomainError("infconv_fn: empty input");
    if (grid_size < 3) throw DomainError("infconv_fn: grid too small");
    InfConvCurve c;
    c.grid_size_ = grid_size;
    c.components_ = std::move(hs);
    const int n = c.components();

    if (n == 1) {
        c.mode_ = Mode::Single;
        c.selector_monotone_ = true;
    } else if (n == 2 && (c.components_[0].is_var() || c.components_[1].is_var())) {
        c.mode_ = Mode::VarPair;
        c.var_index_ = c.components_[0].is_var() ? 0 : 1;
        c.var_alpha_ = std::min(
            std::get<detail::VaRNode>(c.components_[c.var_index_].node()).alpha, 1.0);
        c.selector_monotone_ = true;
    } else {
        bool convex_pwl = true;
        for (const auto& h : c.components_)
            if (!h.as_knots() || !is_convex(h, grid_size)) { convex_pwl = false; break; }
        if (!convex_pwl && n == 2 && c.components_[0].as_knots() &&
            c.components_[1].as_knots()) {
            c.mode_ = Mode::PwlPair;
            c.knots_lhs_ = *c.components_[0].as_knots();
            c.knots_rhs_ = *c.components_[1].as_knots();
        } else if (convex_pwl) {
            c.mode_ = Mode::ConvexMerge;
            for (int k = 0; k < n; ++k) {
                auto knots = *c.components_[k].as_knots();
                for (std::size_t i = 1; i < knots.size(); ++i) {
                    double dx = knots[i].first - knots[i - 1].first;
                    double slope = (knots[i].second - knots[i - 1].second) / dx;
                    c.merged_.push_back({slope, dx, k});
                }
            }
            std::stable_sort(c.merged_.begin(), c.merged_.end(),
                             [](const Segment& a, const Segment& b) {
                                 return a.slope < b.slope;
                             });
            double x = 0.0, y = 0.0;
            c.merged_knots_.emplace_back(0.0, 0.0);
            for (const auto& s : c.merged_) {
                if (x >= 1.0) break;
                double dx = std::min(s.length, 1.0 - x);
                if (dx <= 1e-15) continue;
                x += dx;
                y += s.slope * dx;
                c.merged_knots_.emplace_back(x, y);
            }
            if (c.merged_knots_.back().first < 1.0)
                c.merged_knots_.emplace_back(1.0, c.merged_knots_.back().second);
            c.selector_monotone_ = true;
        } else {
            c.mode_ = Mode::GridFold;
        }
    }

    if (c.mode_ == Mode::GridFold) {
        c.compute_fold(c.values_, &c.args_);
        c.selector_monotone_ = true;
        for (const auto& arg : c.args_) {
            for (int j = 1; j < grid_size; ++j) {
                if (arg[j] < arg[j - 1] || (j - arg[j]) < (j - 1 - arg[j - 1])) {
                    c.selector_monotone_ = false;
                    break;
                }
            }
            if (!c.selector_monotone_) break;
        }
    } else {
        c.values_.resize(grid_size);
        for (int i = 0; i < grid_size; ++i)
            c.values_[i] = c.exact_value(grid_point(i, grid_size));
        if (c.mode_ == Mode::PwlPair) {
            c.selector_monotone_ = true;
            double prev = 0.0;
            for (int i = 0; i < grid_size; ++i) {
                double y = c.exact_split(grid_point(i, grid_size))[0];
                if (y < prev - kEdgeTol) { c.selector_monotone_ = false; break; }
                prev = std::max(prev, y);
            }
        }
    }
    return c;
}

void InfConvCurve::compute_fold(std::vector<double>& out,
                                std::vector<std::vector<int>>* args) const {
    const int g = grid_size_;
    out.resize(g);
    for (int i = 0; i < g; ++i) out[i] = components_[0](grid_point(i, g));
    std::vector<double> hv(g), next(g);
    for (std::size_t k = 1; k < components_.size(); ++k) {
        for (int i = 0; i < g; ++i) hv[i] = components_[k](grid_point(i, g));
        std::vector<int> arg(g, 0);
        for (int j = 0; j < g; ++j) {
            double best = std::numeric_limits<double>::infinity();
            int bi = 0;
            for (int i = 0; i <= j; ++i) {
                double cand = out[i] + hv[j - i];
                if (cand < best) { best = cand; bi = i; }
            }
            next[j] = best;
            arg[j] = bi;
        }
        out.swap(next);
        if (args) args->push_back(std::move(arg));
    }
}

double InfConvCurve::exact_value(double x) const {
    switch (mode_) {
        case Mode::Single:
            return components_[0](x);
        case Mode::VarPair: {
            const auto& other = components_[1 - var_index_];
            return std::min(other(std::max(x - var_alpha_, 0.0)), 1.0);
        }
        case Mode::PwlPair: {
            std::vector<double> cands{0.0, x};
            for (const auto& [kx, ky] : knots_lhs_)
                if (kx > 0.0 && kx < x) cands.push_back(kx);
            for (const auto& [kx, ky] : knots_rhs_)
                if (x - kx > 0.0 && x - kx < x) cands.push_back(x - kx);
            std::sort(cands.begin(), cands.end());
            double best = std::numeric_limits<double>::infinity();
            for (double y : cands) {
                double v = knot_eval(knots_lhs_, y) + knot_eval(knots_rhs_, x - y);
                if (v < best - 1e-15) best = v;
            }
            return best;
        }
        case Mode::ConvexMerge:
            return knot_eval(merged_knots_, x);
        case Mode::GridFold:
            break;
    }
    return 0.0;
}

double InfConvCurve::value_at(double x) const {
    x = check_domain(x);
    if (mode_ != Mode::GridFold) return exact_value(x);
    double pos = x * static_cast<double>(grid_size_ - 1);
    auto i = static_cast<std::size_t>(pos);
    if (i >= values_.size() - 1) return values_.back();
    double w = pos - static_cast<double>(i);
    return values_[i] + w * (values_[i + 1] - values_[i]);
}

double InfConvCurve::refined_value_at(double x) const {
    x = check_domain(x);
    if (mode_ != Mode::GridFold) return exact_value(x);
    double base = value_at(x);
    if (components() != 2) return base;
    int j = static_cast<int>(std::lround(x * (grid_size_ - 1)));
    j = std::clamp(j, 0, grid_size_ - 1);
    double step = 2.0 / static_cast<double>(grid_size_ - 1);
    double center = grid_point(args_[0][j], grid_size_);
    double lo = std::max(0.0, center - step);
    double hi = std::min(x, center + step);
    if (hi <= lo) return base;
    const auto& h1 = components_[0];
    const auto& h2 = components_[1];
    auto f = [&](double y) { return h1(y) + h2(x - y); };
    auto [y, fy] = golden_min(f, lo, hi);
    (void)y;
    return std::min(base, fy);
}

std::vector<double> InfConvCurve::exact_split(double x) const {
    switch (mode_) {
        case Mode::Single:
            return {x};
        case Mode::VarPair: {
            double yv = std::min(x, var_alpha_);
            std::vector<double> out(2);
            out[var_index_] = yv;
            out[1 - var_index_] = x - yv;
            return out;
        }
        case Mode::PwlPair: {
            std::vector<double> cands{0.0, x};
            for (const auto& [kx, ky] : knots_lhs_)
                if (kx > 0.0 && kx < x) cands.push_back(kx);
            for (const auto& [kx, ky] : knots_rhs_)
                if (x - kx > 0.0 && x - kx < x) cands.push_back(x - kx);
            std::sort(cands.begin(), cands.end());
            double best = std::numeric_limits<double>::infinity();
            double by = 0.0;
            for (double y : cands) {
                double v = knot_eval(knots_lhs_, y) + knot_eval(knots_rhs_, x - y);
                if (v < best - 1e-15) { best = v; by = y; }
            }
            return {by, x - by};
        }
        case Mode::ConvexMerge: {
            std::vector<double> parts(components_.size(), 0.0);
            double left = x;
            for (const auto& s : merged_) {
                if (left <= 0.0) break;
                double take = std::min(s.length, left);
                parts[s.owner] += take;
                left -= take;
            }
            return parts;
        }
        case Mode::GridFold:
            break;
    }
    return {};
}

std::vector<double> InfConvCurve::fold_split(int j) const {
    std::vector<double> parts(components_.size(), 0.0);
    for (int k = static_cast<int>(components_.size()) - 1; k >= 1; --k) {
        int i = args_[k - 1][j];
        parts[k] = grid_point(j - i, grid_size_);
        j = i;
    }
    parts[0] = grid_point(j, grid_size_);
    return parts;
}

std::vector<double> InfConvCurve::split_at(double x) const {
    x = check_domain(x);
    if (mode_ != Mode::GridFold) return exact_split(x);
    int j = static_cast<int>(std::lround(x * (grid_size_ - 1)));
    j = std::clamp(j, 0, grid_size_ - 1);
    auto parts = fold_split(j);
    // distribute the off-grid remainder to the first component so the split
    // sums to x exactly
    double sum = 0.0;
    for (double p : parts) sum += p;
    parts[0] = std::max(parts[0] + (x - sum), 0.0);
    return parts;
}

std::vector<double> InfConvCurve::refined_split_at(double x) const {
    x = check_domain(x);
    if (mode_ != Mode::GridFold || components() != 2) return split_at(x);
    int j = static_cast<int>(std::lround(x * (grid_size_ - 1)));
    j = std::clamp(j, 0, grid_size_ - 1);
    double step = 2.0 / static_cast<double>(grid_size_ - 1);
    double center = grid_point(args_[0][j], grid_size_);
    double lo = std::max(0.0, center - step);
    double hi = std::min(x, center + step);
    if (hi <= lo) return split_at(x);
    const auto& h1 = components_[0];
    const auto& h2 = components_[1];
    auto f = [&](double y) { return h1(y) + h2(x - y); };
    auto [y, fy] = golden_min(f, lo, hi);
    double grid_y = std::min(center, x);
    if (f(grid_y) <= fy) y = grid_y;
    return {y, x - y};
}

double InfConvCurve::lipschitz_estimate() const {
    double lip = 0.0;
    for (std::size_t i = 1; i < values_.size(); ++i)
        lip = std::max(lip, (values_[i] - values_[i - 1]) *
                                static_cast<double>(grid_size_ - 1));
    return lip;
}

double InfConvCurve::cross_check_deviation() const {
    std::vector<double> fold;
    compute_fold(fold, nullptr);
    double dev = 0.0;
    for (std::size_t i = 0; i < fold.size(); ++i)
        dev = std::max(dev, std::abs(fold[i] - values_[i]));
    return dev;
}

DistortionFn InfConvCurve::as_distortion() const {
    if (mode_ == Mode::Single) return components_[0];
    if (mode_ == Mode::ConvexMerge) {
        auto knots = merged_knots_;
        return DistortionFn::piecewise_linear(std::move(knots));
    }
    std::vector<double> v = values_;
    // guard against microscopic negative dips from the fold
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::max(v[i], v[i - 1]);
    if (!v.empty()) v.front() = 0.0;
    return DistortionFn::tabulated(std::move(v));
}

InfConvCurve infconv_fn(const std::vector<DistortionFn>& hs, int grid_size) {
    return InfConvCurve::build(hs, grid_size);
}

} // namespace riskshare
