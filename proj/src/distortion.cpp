#include "riskshare/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace riskshare {

using detail::ActivePartNode;
using detail::DualOfNode;
using detail::DualPowerNode;
using detail::FnNode;
using detail::IdentityNode;
using detail::PiecewiseLinearNode;
using detail::PowerNode;
using detail::ShiftedNode;
using detail::TabulatedNode;
using detail::VaRNode;

namespace {

constexpr double kEdgeTol = 1e-12;

double eval_knots(const std::vector<std::pair<double, double>>& knots, double t) {
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

std::vector<std::pair<double, double>> checked_knots(
    std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw DomainError("piecewise_linear: need at least 2 knots");
    for (auto& [x, y] : knots) {
        if (!std::isfinite(x) || !std::isfinite(y))
            throw DomainError("piecewise_linear: non-finite knot");
    }
    if (std::abs(knots.front().first) > kEdgeTol || std::abs(knots.front().second) > kEdgeTol)
        throw DomainError("piecewise_linear: first knot must be (0, 0)");
    if (std::abs(knots.back().first - 1.0) > kEdgeTol)
        throw DomainError("piecewise_linear: last knot must have x = 1");
    knots.front() = {0.0, 0.0};
    knots.back().first = 1.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (knots[i].first - knots[i - 1].first <= 1e-14)
            throw DomainError("piecewise_linear: knot x values must strictly increase");
        if (knots[i].second < knots[i - 1].second - kTol)
            throw DomainError("piecewise_linear: knot values must be nondecreasing");
        if (knots[i].second < knots[i - 1].second) knots[i].second = knots[i - 1].second;
    }
    return knots;
}

} // namespace

DistortionFn::DistortionFn(FnNode node)
    : node_(std::make_shared<const FnNode>(std::move(node))) {}

DistortionFn DistortionFn::power(double beta) {
    if (!(beta > 1e-12)) throw DomainError("power: beta must be positive");
    return DistortionFn(PowerNode{beta});
}

DistortionFn DistortionFn::dual_power(double alpha) {
    if (!(alpha > 1e-12)) throw DomainError("dual_power: alpha must be positive");
    return DistortionFn(DualPowerNode{alpha});
}

DistortionFn DistortionFn::piecewise_linear(std::vector<std::pair<double, double>> knots) {
    return DistortionFn(PiecewiseLinearNode{checked_knots(std::move(knots))});
}

DistortionFn DistortionFn::var_indicator(double alpha, bool closed) {
    if (alpha < -kEdgeTol || alpha > 2.0)
        throw DomainError("var_indicator: alpha outside [0, 2]");
    alpha = std::max(alpha, 0.0);
    if (closed && alpha <= kEdgeTol)
        throw DomainError("var_indicator: closed indicator needs alpha > 0");
    return DistortionFn(VaRNode{alpha, closed});
}

DistortionFn DistortionFn::identity() { return DistortionFn(IdentityNode{}); }

DistortionFn DistortionFn::tabulated(std::vector<double> values) {
    if (values.size() < 2) throw DomainError("tabulated: need at least 2 values");
    for (double v : values)
        if (!std::isfinite(v)) throw DomainError("tabulated: non-finite value");
    if (std::abs(values.front()) > kEdgeTol)
        throw DomainError("tabulated: first value must be 0");
    values.front() = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1] - kTol)
            throw DomainError("tabulated: values must be nondecreasing");
        if (values[i] < values[i - 1]) values[i] = values[i - 1];
    }
    return DistortionFn(TabulatedNode{std::move(values)});
}

DistortionFn DistortionFn::expected_shortfall(double b) {
    if (!(b > 1e-12) || b > 1.0 + kEdgeTol)
        throw DomainError("expected_shortfall: b must lie in (0, 1]");
    if (b >= 1.0 - kEdgeTol) return identity();
    return piecewise_linear({{0.0, 0.0}, {b, 1.0}, {1.0, 1.0}});
}

DistortionFn DistortionFn::flat_then_linear(double a) {
    if (a < -kEdgeTol || a >= 1.0 - 1e-12)
        throw DomainError("flat_then_linear: a must lie in [0, 1)");
    if (a <= 1e-15) return identity();
    return piecewise_linear({{0.0, 0.0}, {a, 0.0}, {1.0, 1.0}});
}

double DistortionFn::operator()(double t) const {
    if (t < -kEdgeTol || t > 1.0 + kEdgeTol) {
        std::ostringstream os;
        os << "distortion eval: t = " << t << " outside [0, 1]";
        throw DomainError(os.str());
    }
    t = std::clamp(t, 0.0, 1.0);
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, PowerNode>) {
                return std::pow(t, n.beta);
            } else if constexpr (std::is_same_v<T, DualPowerNode>) {
                return 1.0 - std::pow(1.0 - t, n.alpha);
            } else if constexpr (std::is_same_v<T, PiecewiseLinearNode>) {
                return eval_knots(n.knots, t);
            } else if constexpr (std::is_same_v<T, VaRNode>) {
                // tolerant at the jump: survival sums arrive with fp dust and
                // must land on the intended side of the threshold
                return (n.closed ? t >= n.alpha - kEdgeTol : t > n.alpha + kEdgeTol)
                           ? 1.0
                           : 0.0;
            } else if constexpr (std::is_same_v<T, IdentityNode>) {
                return t;
            } else if constexpr (std::is_same_v<T, TabulatedNode>) {
                const auto& v = n.values;
                double pos = t * static_cast<double>(v.size() - 1);
                auto i = static_cast<std::size_t>(pos);
                if (i >= v.size() - 1) return v.back();
                double w = pos - static_cast<double>(i);
                return v[i] + w * (v[i + 1] - v[i]);
            } else if constexpr (std::is_same_v<T, ShiftedNode>) {
                return n.scale * (*n.base)(std::max(t - n.offset, 0.0));
            } else if constexpr (std::is_same_v<T, DualOfNode>) {
                return 1.0 - (*n.base)(1.0 - t);
            } else {
                static_assert(std::is_same_v<T, ActivePartNode>);
                return (*n.base)(std::min(t + n.offset, 1.0));
            }
        },
        *node_);
}

double DistortionFn::at_one() const { return (*this)(1.0); }

bool DistortionFn::is_var() const {
    return std::holds_alternative<VaRNode>(*node_);
}

std::optional<std::vector<std::pair<double, double>>> DistortionFn::as_knots() const {
    if (const auto* p = std::get_if<PiecewiseLinearNode>(node_.get())) return p->knots;
    if (std::holds_alternative<IdentityNode>(*node_))
        return std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, 1.0}};
    return std::nullopt;
}

std::string DistortionFn::describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, PowerNode>) {
                os << "power(" << n.beta << ")";
            } else if constexpr (std::is_same_v<T, DualPowerNode>) {
                os << "dual_power(" << n.alpha << ")";
            } else if constexpr (std::is_same_v<T, PiecewiseLinearNode>) {
                os << "pwl(" << n.knots.size() << " knots)";
            } else if constexpr (std::is_same_v<T, VaRNode>) {
                os << (n.closed ? "var_closed(" : "var(") << n.alpha << ")";
            } else if constexpr (std::is_same_v<T, IdentityNode>) {
                os << "identity";
            } else if constexpr (std::is_same_v<T, TabulatedNode>) {
                os << "tabulated(" << n.values.size() << ")";
            } else if constexpr (std::is_same_v<T, ShiftedNode>) {
                os << "shifted(" << n.base->describe() << ", offset=" << n.offset
                   << ", scale=" << n.scale << ")";
            } else if constexpr (std::is_same_v<T, DualOfNode>) {
                os << "dual_of(" << n.base->describe() << ")";
            } else {
                static_assert(std::is_same_v<T, ActivePartNode>);
                os << "active_part(" << n.base->describe() << ", " << n.offset << ")";
            }
        },
        *node_);
    return os.str();
}

double eval(const DistortionFn& h, double t) { return h(t); }

DistortionFn dual(const DistortionFn& h) {
    const FnNode& node = h.node();
    if (const auto* p = std::get_if<PowerNode>(&node))
        return DistortionFn(DualPowerNode{p->beta});
    if (const auto* p = std::get_if<DualPowerNode>(&node))
        return DistortionFn(PowerNode{p->alpha});
    if (std::holds_alternative<IdentityNode>(node)) return DistortionFn::identity();
    if (const auto* p = std::get_if<VaRNode>(&node)) {
        if (p->closed) return DistortionFn(VaRNode{1.0 - std::min(p->alpha, 1.0), false});
        if (p->alpha < 1.0 - kEdgeTol)
            return DistortionFn(VaRNode{1.0 - p->alpha, true});
        // dual of the zero indicator is the constant 1; keep it as a wrapper
        return DistortionFn(DualOfNode{std::make_shared<const DistortionFn>(h)});
    }
    if (const auto* p = std::get_if<PiecewiseLinearNode>(&node)) {
        if (std::abs(p->knots.back().second - 1.0) <= kEdgeTol) {
            std::vector<std::pair<double, double>> out;
            out.reserve(p->knots.size());
            for (auto it = p->knots.rbegin(); it != p->knots.rend(); ++it)
                out.emplace_back(1.0 - it->first, 1.0 - it->second);
            return DistortionFn(PiecewiseLinearNode{checked_knots(std::move(out))});
        }
        return DistortionFn(DualOfNode{std::make_shared<const DistortionFn>(h)});
    }
    if (const auto* p = std::get_if<TabulatedNode>(&node)) {
        if (std::abs(p->values.back() - 1.0) <= kEdgeTol) {
            std::vector<double> out(p->values.size());
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = 1.0 - p->values[p->values.size() - 1 - i];
            out.front() = 0.0;
            return DistortionFn(TabulatedNode{std::move(out)});
        }
        return DistortionFn(DualOfNode{std::make_shared<const DistortionFn>(h)});
    }
    if (const auto* p = std::get_if<DualOfNode>(&node)) return *p->base;
    return DistortionFn(DualOfNode{std::make_shared<const DistortionFn>(h)});
}

namespace {

enum class Shape { Concave, Convex };

bool grid_shape_ok(const DistortionFn& h, int grid_size, Shape shape) {
    double prev2 = h(0.0);
    double prev1 = h(grid_point(1, grid_size));
    for (int i = 2; i < grid_size; ++i) {
        double cur = h(grid_point(i, grid_size));
        double dd = cur - 2.0 * prev1 + prev2;
        if (shape == Shape::Concave && dd > kTol) return false;
        if (shape == Shape::Convex && dd < -kTol) return false;
        prev2 = prev1;
        prev1 = cur;
    }
    return true;
}

bool slopes_ok(const std::vector<std::pair<double, double>>& knots, Shape shape) {
    double prev_slope = shape == Shape::Concave ? std::numeric_limits<double>::infinity()
                                                : -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < knots.size(); ++i) {
        double s = (knots[i].second - knots[i - 1].second) /
                   (knots[i].first - knots[i - 1].first);
        if (shape == Shape::Concave && s > prev_slope + kTol) return false;
        if (shape == Shape::Convex && s < prev_slope - kTol) return false;
        prev_slope = s;
    }
    return true;
}

bool shape_check(const DistortionFn& h, int grid_size, Shape shape) {
    const FnNode& node = h.node();
    if (const auto* p = std::get_if<PowerNode>(&node))
        return shape == Shape::Concave ? p->beta <= 1.0 + kEdgeTol
                                       : p->beta >= 1.0 - kEdgeTol;
    if (const auto* p = std::get_if<DualPowerNode>(&node))
        return shape == Shape::Concave ? p->alpha >= 1.0 - kEdgeTol
                                       : p->alpha <= 1.0 + kEdgeTol;
    if (std::holds_alternative<IdentityNode>(node)) return true;
    if (const auto* p = std::get_if<VaRNode>(&node)) {
        if (!p->closed && shape == Shape::Concave) return p->alpha <= 1e-15;
        // the identically-zero indicator (alpha >= 1, open) is linear
        if (!p->closed && shape == Shape::Convex) return p->alpha >= 1.0 - kEdgeTol;
        if (p->closed && shape == Shape::Convex) return p->alpha >= 1.0 - kEdgeTol;
        return false;
    }
    if (const auto* p = std::get_if<PiecewiseLinearNode>(&node))
        return slopes_ok(p->knots, shape);
    if (const auto* p = std::get_if<DualOfNode>(&node))
        return shape_check(*p->base, grid_size,
                           shape == Shape::Concave ? Shape::Convex : Shape::Concave);
    return grid_shape_ok(h, grid_size, shape);
}

} // namespace

bool is_concave(const DistortionFn& h, int grid_size) {
    return shape_check(h, grid_size, Shape::Concave);
}

bool is_convex(const DistortionFn& h, int grid_size) {
    return shape_check(h, grid_size, Shape::Convex);
}

bool dominates(const DistortionFn& h1, const DistortionFn& h2, int grid_size) {
    DistortionFn d = dual(h2);
    for (int i = 0; i < grid_size; ++i) {
        double t = grid_point(i, grid_size);
        if (h1(t) < d(t) - kTol) return false;
    }
    return true;
}

double alpha_of(const DistortionFn& h, int grid_size) {
    const FnNode& node = h.node();
    if (std::holds_alternative<PowerNode>(node) ||
        std::holds_alternative<DualPowerNode>(node) ||
        std::holds_alternative<IdentityNode>(node))
        return 0.0;
    if (const auto* p = std::get_if<VaRNode>(&node)) return std::min(p->alpha, 1.0);
    if (const auto* p = std::get_if<PiecewiseLinearNode>(&node)) {
        double a = 0.0;
        for (const auto& [x, y] : p->knots) {
            if (y > kEdgeTol) break;
            a = x;
        }
        return a;
    }
    if (const auto* p = std::get_if<TabulatedNode>(&node)) {
        double a = 0.0;
        for (std::size_t i = 0; i < p->values.size(); ++i) {
            if (p->values[i] > kEdgeTol) break;
            a = grid_point(static_cast<int>(i), static_cast<int>(p->values.size()));
        }
        return a;
    }
    if (const auto* p = std::get_if<ShiftedNode>(&node))
        return std::min(1.0, p->offset + alpha_of(*p->base, grid_size));
    double a = 0.0;
    for (int i = 0; i < grid_size; ++i) {
        double t = grid_point(i, grid_size);
        if (h(t) > kEdgeTol) break;
        a = t;
    }
    return a;
}

DistortionFn active_part(const DistortionFn& h, int grid_size) {
    double a = alpha_of(h, grid_size);
    if (a <= 1e-15) return h;
    const FnNode& node = h.node();
    if (const auto* p = std::get_if<VaRNode>(&node); p && !p->closed)
        return DistortionFn(VaRNode{0.0, false});
    if (const auto* p = std::get_if<PiecewiseLinearNode>(&node)) {
        std::vector<std::pair<double, double>> out{{0.0, 0.0}};
        for (const auto& [x, y] : p->knots)
            if (x > a + 1e-15) out.emplace_back(x - a, y);
        if (out.back().first < 1.0 - 1e-15)
            out.emplace_back(1.0, p->knots.back().second);
        else
            out.back().first = 1.0;
        return DistortionFn(PiecewiseLinearNode{checked_knots(std::move(out))});
    }
    return DistortionFn(ActivePartNode{std::make_shared<const DistortionFn>(h), a});
}

DistortionFn shift(const DistortionFn& h, double a) {
    if (a < -kEdgeTol || a > 1.0 + kEdgeTol)
        throw DomainError("shift: offset must lie in [0, 1]");
    a = std::clamp(a, 0.0, 1.0);
    if (a <= 1e-15) return h;
    const FnNode& node = h.node();
    if (a >= 1.0 - 1e-15)
        return DistortionFn::piecewise_linear({{0.0, 0.0}, {1.0, 0.0}});
    if (const auto* p = std::get_if<VaRNode>(&node))
        return DistortionFn(VaRNode{p->alpha + a, p->closed});
    if (std::holds_alternative<IdentityNode>(node))
        return DistortionFn::piecewise_linear({{0.0, 0.0}, {a, 0.0}, {1.0, 1.0 - a}});
    if (const auto* p = std::get_if<PiecewiseLinearNode>(&node)) {
        std::vector<std::pair<double, double>> out{{0.0, 0.0}, {a, 0.0}};
        for (const auto& [x, y] : p->knots)
            if (x > 1e-15 && x + a < 1.0 - 1e-15) out.emplace_back(x + a, y);
        out.emplace_back(1.0, eval_knots(p->knots, 1.0 - a));
        return DistortionFn(PiecewiseLinearNode{checked_knots(std::move(out))});
    }
    if (const auto* p = std::get_if<ShiftedNode>(&node)) {
        double off = p->offset + a;
        if (off >= 1.0 - 1e-15)
            return DistortionFn::piecewise_linear({{0.0, 0.0}, {1.0, 0.0}});
        return DistortionFn(ShiftedNode{p->base, off, p->scale});
    }
    return DistortionFn(ShiftedNode{std::make_shared<const DistortionFn>(h), a, 1.0});
}

namespace {

void add_crossings(const std::vector<std::vector<std::pair<double, double>>>& all,
                   std::vector<double>& xs) {
    std::vector<double> base = xs;
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    for (std::size_t seg = 0; seg + 1 < base.size(); ++seg) {
        double xl = base[seg], xr = base[seg + 1];
        for (std::size_t i = 0; i < all.size(); ++i) {
            for (std::size_t j = i + 1; j < all.size(); ++j) {
                double dil = eval_knots(all[i], xl) - eval_knots(all[j], xl);
                double dir = eval_knots(all[i], xr) - eval_knots(all[j], xr);
                if ((dil > 0 && dir < 0) || (dil < 0 && dir > 0)) {
                    double x = xl + (xr - xl) * dil / (dil - dir);
                    if (x > xl + 1e-14 && x < xr - 1e-14) xs.push_back(x);
                }
            }
        }
    }
}

} // namespace

DistortionFn min_of(const std::vector<DistortionFn>& hs, int grid_size) {
    if (hs.empty()) throw DomainError("min_of: empty input");
    if (hs.size() == 1) return hs.front();
    // keep the exact node when one input is everywhere the smallest
    for (std::size_t i = 0; i < hs.size(); ++i) {
        bool smallest = true;
        for (std::size_t j = 0; j < hs.size() && smallest; ++j) {
            if (j == i) continue;
            for (int k = 0; k < grid_size; ++k) {
                double t = grid_point(k, grid_size);
                if (hs[i](t) > hs[j](t) + 1e-15) {
                    smallest = false;
                    break;
                }
            }
        }
        if (smallest) return hs[i];
    }
    std::vector<std::vector<std::pair<double, double>>> all;
    all.reserve(hs.size());
    bool all_pwl = true;
    for (const auto& h : hs) {
        auto k = h.as_knots();
        if (!k) {
            all_pwl = false;
            break;
        }
        all.push_back(std::move(*k));
    }
    if (all_pwl) {
        std::vector<double> xs;
        for (const auto& k : all)
            for (const auto& [x, y] : k) xs.push_back(x);
        add_crossings(all, xs);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end(),
                             [](double a, double b) { return std::abs(a - b) <= 1e-14; }),
                 xs.end());
        std::vector<std::pair<double, double>> out;
        out.reserve(xs.size());
        for (double x : xs) {
            double y = std::numeric_limits<double>::infinity();
            for (const auto& k : all) y = std::min(y, eval_knots(k, x));
            out.emplace_back(x, y);
        }
        return DistortionFn(PiecewiseLinearNode{checked_knots(std::move(out))});
    }
    std::vector<double> values(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        double t = grid_point(i, grid_size);
        double y = std::numeric_limits<double>::infinity();
        for (const auto& h : hs) y = std::min(y, h(t));
        values[i] = y;
    }
    return DistortionFn::tabulated(std::move(values));
}

std::pair<DistortionFn, double> normalize(const DistortionFn& h) {
    double c = h.at_one();
    if (std::abs(c) <= kEdgeTol)
        throw DomainError("normalize: h(1) is zero, degenerate distortion");
    if (c < 0.0) throw DomainError("normalize: h(1) is negative");
    if (std::abs(c - 1.0) <= kEdgeTol) return {h, c};
    const FnNode& node = h.node();
    if (const auto* p = std::get_if<PiecewiseLinearNode>(&node)) {
        auto knots = p->knots;
        for (auto& [x, y] : knots) y /= c;
        return {DistortionFn(PiecewiseLinearNode{std::move(knots)}), c};
    }
    if (const auto* p = std::get_if<TabulatedNode>(&node)) {
        auto values = p->values;
        for (double& v : values) v /= c;
        return {DistortionFn(TabulatedNode{std::move(values)}), c};
    }
    if (const auto* p = std::get_if<ShiftedNode>(&node))
        return {DistortionFn(ShiftedNode{p->base, p->offset, p->scale / c}), c};
    return {DistortionFn(ShiftedNode{std::make_shared<const DistortionFn>(h), 0.0, 1.0 / c}),
            c};
}

bool same_function(const DistortionFn& a, const DistortionFn& b, double tol,
                   int grid_size) {
    for (int i = 0; i < grid_size; ++i) {
        double t = grid_point(i, grid_size);
        if (std::abs(a(t) - b(t)) > tol) return false;
    }
    return true;
}

} // namespace riskshare
