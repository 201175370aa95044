#include "riskshare/multi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace riskshare {

std::string to_string(Attitude a) {
    switch (a) {
        case Attitude::Averse: return "averse";
        case Attitude::Seeking: return "seeking";
        case Attitude::Other: return "other";
    }
    return "other";
}

Attitude classify_agent(const DistortionFn& h, int grid_size) {
    if (is_concave(h, grid_size)) return Attitude::Averse;
    if (is_convex(h, grid_size)) return Attitude::Seeking;
    return Attitude::Other;
}

Economy make_economy(std::vector<DistortionFn> agents, LatticeRV risk,
                     int grid_size) {
    Economy eco{{}, std::move(risk)};
    eco.agents.reserve(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        Attitude att = classify_agent(agents[i], grid_size);
        eco.agents.push_back(
            {"agent" + std::to_string(i + 1), std::move(agents[i]), att});
    }
    return eco;
}

namespace {

constexpr double kPosTol = 1e-12;

struct SortedSpace {
    LatticeRV sorted;
    std::vector<int> perm; // sorted position -> original atom
};

SortedSpace sort_space(const LatticeRV& x) {
    auto idx = x.order_by_value();
    std::vector<double> v, p;
    v.reserve(x.atoms());
    p.reserve(x.atoms());
    for (int i : idx) {
        v.push_back(x.values()[i]);
        p.push_back(x.probs()[i]);
    }
    return {LatticeRV::weighted(std::move(v), std::move(p)), std::move(idx)};
}

int snap_boundary(const LatticeRV& sorted, double target) {
    int best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= sorted.atoms(); ++k) {
        double bound = k == 0 ? 0.0 : sorted.u_high(k - 1);
        double err = std::abs(bound - target);
        if (err < best_err - 1e-18) {
            best_err = err;
            best = k;
        }
    }
    return best;
}

// Disjoint uniform-measure intervals (lo, hi], one per group agent; atoms in
// the snapped interval contribute their full value to that agent.
struct IntervalAssign {
    int agent; // group-local index
    double lo;
    double hi;
};

std::vector<std::vector<double>> assign_intervals(
    const LatticeRV& x, const SortedSpace& sp, int group_size,
    const std::vector<IntervalAssign>& intervals) {
    std::vector<std::vector<double>> parts(
        group_size, std::vector<double>(x.atoms(), 0.0));
    for (const auto& iv : intervals) {
        int kb = snap_boundary(sp.sorted, iv.lo);
        int ke = snap_boundary(sp.sorted, iv.hi);
        for (int s = kb; s < ke; ++s) {
            int orig = sp.perm[s];
            parts[iv.agent][orig] = x.values()[orig];
        }
    }
    return parts;
}

// Distinct positive levels of x, ascending, with survival probabilities.
std::vector<std::pair<double, double>> level_survivals(const LatticeRV& x) {
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k < x.atoms(); ++k)
        if (x.probs()[k] > 0.0) pts.emplace_back(x.values()[k], x.probs()[k]);
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::pair<double, double>> levels;
    double surv = 0.0;
    for (const auto& [v, p] : pts) {
        surv += p;
        if (!levels.empty() && levels.back().first == v)
            levels.back().second = surv;
        else
            levels.emplace_back(v, surv);
    }
    std::reverse(levels.begin(), levels.end());
    return levels;
}

// Each layer goes to the group agent with the smallest distortion at the
// layer's survival probability; components come out comonotone.
std::vector<std::vector<double>> comonotone_expand(
    const std::vector<DistortionFn>& fns, const LatticeRV& y) {
    std::vector<std::vector<double>> parts(
        fns.size(), std::vector<double>(y.atoms(), 0.0));
    double prev = 0.0;
    for (const auto& [lvl, sv] : level_survivals(y)) {
        if (lvl <= prev) continue;
        double delta = lvl - prev;
        double s = std::clamp(sv, 0.0, 1.0);
        std::size_t pick = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < fns.size(); ++i) {
            double v = fns[i](s);
            if (v < best - 1e-15) {
                best = v;
                pick = i;
            }
        }
        for (int k = 0; k < y.atoms(); ++k)
            if (y.values()[k] >= lvl - kPosTol) parts[pick][k] += delta;
        prev = lvl;
    }
    return parts;
}

std::optional<double> flat_level_of(const DistortionFn& h) {
    auto knots = h.as_knots();
    if (!knots) return std::nullopt;
    if (std::abs(knots->back().second - 1.0) > kPosTol) return std::nullopt;
    double a = alpha_of(h);
    if (a <= kPosTol || a >= 1.0 - kPosTol) return std::nullopt;
    for (const auto& [x, y] : *knots)
        if (std::abs(y - std::max(0.0, (x - a) / (1.0 - a))) > kPosTol)
            return std::nullopt;
    return a;
}

std::optional<double> es_level_of(const DistortionFn& h) {
    auto knots = h.as_knots();
    if (!knots) return std::nullopt;
    if (std::abs(knots->back().second - 1.0) > kPosTol) return std::nullopt;
    double b = 1.0;
    for (const auto& [x, y] : *knots) {
        if (y >= 1.0 - kPosTol) {
            b = x;
            break;
        }
    }
    if (b <= kPosTol) return std::nullopt;
    for (const auto& [x, y] : *knots)
        if (std::abs(y - std::min(x / b, 1.0)) > kPosTol) return std::nullopt;
    return b;
}

// Stacked top-tail intervals for flat-type agents, widest first; when
// absorb_bottom, the narrowest agent also takes everything below the stack.
std::vector<IntervalAssign> stacked_flat_intervals(
    const std::vector<std::pair<int, double>>& agent_widths, bool absorb_bottom) {
    auto order = agent_widths;
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.second > b.second;
    });
    std::vector<IntervalAssign> out;
    double top = 1.0;
    for (const auto& [agent, width] : order) {
        double lo = std::max(top - width, 0.0);
        out.push_back({agent, lo, top});
        top = lo;
    }
    if (absorb_bottom && !out.empty() && top > 0.0) out.back().lo = 0.0;
    return out;
}

// Split z among the seeking group: disjoint events per layer, driven by the
// group curve's selector; exact closed forms for flats and pairs.
std::vector<std::vector<double>> counter_expand(
    const std::vector<DistortionFn>& fns, const InfConvCurve& curve,
    const LatticeRV& z, const SolveOptions& opts) {
    const int n = static_cast<int>(fns.size());
    if (n == 1) return {z.values()};

    SortedSpace sp = sort_space(z);
    std::vector<std::pair<int, double>> widths;
    bool all_flat = true;
    for (int i = 0; i < n && all_flat; ++i) {
        if (auto a = flat_level_of(fns[i]))
            widths.emplace_back(i, *a);
        else
            all_flat = false;
    }
    if (all_flat)
        return assign_intervals(z, sp, n,
                                stacked_flat_intervals(widths, true));

    if (n == 2) {
        SharingSolution pair = solve_lplus(fns[0], fns[1], z, opts);
        if (pair.allocation) return pair.allocation->parts;
    }

    // generic: per-layer stacked events with selector widths
    std::vector<std::vector<double>> parts(n,
                                           std::vector<double>(z.atoms(), 0.0));
    double prev = 0.0;
    for (const auto& [lvl, sv] : level_survivals(z)) {
        if (lvl <= prev) continue;
        double delta = lvl - prev;
        double s = std::clamp(sv, 0.0, 1.0);
        auto split = curve.split_at(s);
        double top = 1.0;
        for (int i = 0; i < n; ++i) {
            double width = i < static_cast<int>(split.size()) ? split[i] : 0.0;
            double lo = i + 1 == n ? 1.0 - s : std::max(top - width, 1.0 - s);
            int kb = snap_boundary(sp.sorted, lo);
            int ke = snap_boundary(sp.sorted, top);
            for (int si = kb; si < ke; ++si) {
                int orig = sp.perm[si];
                if (z.values()[orig] >= lvl - kPosTol) parts[i][orig] += delta;
            }
            top = lo;
        }
        prev = lvl;
    }
    return parts;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

LatticeRV part_rv(const LatticeRV& x, const std::vector<double>& part) {
    return LatticeRV::weighted(part, x.probs());
}

std::string dependence_report(const Economy& eco, const Reduction& red,
                              const std::vector<std::vector<double>>& parts) {
    std::ostringstream os;
    auto check = [&](const std::vector<int>& group, bool comonotone) {
        if (group.size() < 2) return std::string("trivial");
        std::vector<LatticeRV> rvs;
        rvs.reserve(group.size());
        for (int i : group) rvs.push_back(part_rv(eco.risk, parts[i]));
        bool ok = comonotone ? is_comonotonic(rvs) : is_counter_monotonic(rvs);
        return std::string(ok ? "yes" : "no");
    };
    os << "averse components comonotonic: " << check(red.averse, true)
       << "; seeking components counter-monotonic: " << check(red.seeking, false);
    return os.str();
}

SharingSolution assemble(const Economy& eco, const Reduction& red,
                         std::vector<std::vector<double>> parts, double bench,
                         CaseTag tag, const SolveOptions& opts,
                         std::string note) {
    Allocation alloc{eco.risk, std::move(parts)};
    alloc.validate(true);
    double achieved = 0.0;
    for (std::size_t i = 0; i < eco.agents.size(); ++i)
        achieved += rho(eco.agents[i].h, alloc.component(static_cast<int>(i)));
    SharingSolution sol;
    sol.method = tag;
    sol.value = achieved;
    sol.benchmark = bench;
    sol.upper_bound = achieved;
    sol.lower_bound = std::min(bench, achieved);
    sol.exact = std::abs(achieved - bench) <= opts.tol;
    sol.note = std::move(note) + "; " +
               dependence_report(eco, red, alloc.parts);
    sol.allocation = std::move(alloc);
    return sol;
}

} // namespace

Reduction reduce(const Economy& eco, int grid_size) {
    if (eco.agents.empty()) throw DomainError("reduce: economy has no agents");
    Reduction red;
    for (std::size_t i = 0; i < eco.agents.size(); ++i) {
        const auto& ag = eco.agents[i];
        Attitude shape = classify_agent(ag.h, grid_size);
        if (ag.attitude == Attitude::Other || shape == Attitude::Other)
            throw ClassificationError("reduce: agent '" + ag.id +
                                      "' is neither risk averse nor risk seeking");
        if (ag.attitude == Attitude::Averse && !is_concave(ag.h, grid_size))
            throw ClassificationError("reduce: agent '" + ag.id +
                                      "' declared averse but is not concave");
        if (ag.attitude == Attitude::Seeking && !is_convex(ag.h, grid_size))
            throw ClassificationError("reduce: agent '" + ag.id +
                                      "' declared seeking but is not convex");
        if (ag.attitude == Attitude::Averse)
            red.averse.push_back(static_cast<int>(i));
        else
            red.seeking.push_back(static_cast<int>(i));
    }
    if (!red.averse.empty()) {
        std::vector<DistortionFn> fns;
        for (int i : red.averse) fns.push_back(eco.agents[i].h);
        red.averse_rep = min_of(fns, grid_size);
    }
    if (!red.seeking.empty()) {
        std::vector<DistortionFn> fns;
        for (int i : red.seeking) fns.push_back(eco.agents[i].h);
        InfConvCurve curve = InfConvCurve::build(std::move(fns), grid_size);
        red.seeking_rep = curve.as_distortion();
        red.seeking_scale = red.seeking_rep->at_one();
        red.seeking_exact = curve.exact();
        if (red.seeking_scale > kPosTol) {
            auto [hat, scale] = normalize(*red.seeking_rep);
            (void)scale;
            red.seeking_rep_hat = std::move(hat);
        }
    }
    return red;
}

SharingSolution solve_n(const Economy& eco, const SolveOptions& opts) {
    const LatticeRV& x = eco.risk;
    if (!x.nonnegative()) throw DomainError("solve_n: risk must be nonnegative");
    Reduction red = reduce(eco, opts.grid_size);
    const int g = opts.grid_size;
    const auto n_agents = eco.agents.size();

    if (n_agents == 1) {
        std::vector<std::vector<double>> parts{x.values()};
        return assemble(eco, red, std::move(parts), rho(eco.agents[0].h, x),
                        red.seeking.empty() ? CaseTag::ConcaveMin
                                            : CaseTag::ConvexDominated,
                        opts, "single agent, identity allocation");
    }

    if (red.seeking.empty()) {
        std::vector<DistortionFn> fns;
        for (int i : red.averse) fns.push_back(eco.agents[i].h);
        double bench = rho_fn(
            [&](double t) {
                double m = std::numeric_limits<double>::infinity();
                for (const auto& h : fns) m = std::min(m, h(t));
                return m;
            },
            x);
        return assemble(eco, red, comonotone_expand(fns, x), bench,
                        CaseTag::ConcaveMin, opts,
                        "all agents risk averse; layered assignment to the "
                        "pointwise-cheapest agent");
    }

    std::vector<DistortionFn> seek_fns;
    for (int i : red.seeking) seek_fns.push_back(eco.agents[i].h);
    InfConvCurve seek_curve = InfConvCurve::build(seek_fns, g);

    auto scatter = [&](const std::vector<std::vector<double>>& averse_parts,
                       const std::vector<std::vector<double>>& seeking_parts) {
        std::vector<std::vector<double>> parts(
            n_agents, std::vector<double>(x.atoms(), 0.0));
        for (std::size_t k = 0; k < red.averse.size(); ++k)
            parts[red.averse[k]] = averse_parts[k];
        for (std::size_t k = 0; k < red.seeking.size(); ++k)
            parts[red.seeking[k]] = seeking_parts[k];
        return parts;
    };

    if (red.averse.empty()) {
        double bench = rho_curve(seek_curve, x);
        auto seeking_parts = counter_expand(seek_fns, seek_curve, x, opts);
        std::vector<std::vector<double>> averse_parts;
        return assemble(eco, red, scatter(averse_parts, seeking_parts), bench,
                        CaseTag::ConvexDominated, opts,
                        "all agents risk seeking; value prices the group "
                        "inf-convolution");
    }

    const DistortionFn& g1 = *red.averse_rep;
    std::vector<std::vector<double>> averse_zero(
        red.averse.size(), std::vector<double>(x.atoms(), 0.0));

    for (int i : red.seeking) {
        if (!dominates(g1, eco.agents[i].h, g)) continue;
        double bench = rho_curve(seek_curve, x);
        auto seeking_parts = counter_expand(seek_fns, seek_curve, x, opts);
        return assemble(eco, red, scatter(averse_zero, seeking_parts), bench,
                        CaseTag::ConvexDominated, opts,
                        "averse group dominated via agent '" +
                            eco.agents[i].id +
                            "'; seeking group absorbs the risk");
    }

    auto b_es = es_level_of(g1);
    bool all_flat = true;
    std::vector<std::pair<int, double>> flat_widths; // group-local
    for (std::size_t k = 0; k < seek_fns.size() && all_flat; ++k) {
        if (auto a = flat_level_of(seek_fns[k]))
            flat_widths.emplace_back(static_cast<int>(k), *a);
        else
            all_flat = false;
    }
    if (b_es && all_flat) {
        double b = *b_es;
        double asum = 0.0, amin = 1.0;
        for (const auto& [k, a] : flat_widths) {
            asum += a;
            amin = std::min(amin, a);
        }
        InfConvCurve pair_curve = infconv_fn({g1, seek_curve.as_distortion()}, g);
        double bench = rho_curve(pair_curve, x);
        bool case_one = amin + b <= 1.0 + kPosTol;
        SortedSpace sp = sort_space(x);
        auto seeking_parts = assign_intervals(
            x, sp, static_cast<int>(seek_fns.size()),
            stacked_flat_intervals(flat_widths, case_one));
        std::vector<std::vector<double>> averse_parts = averse_zero;
        if (!case_one && asum < 1.0 - kPosTol) {
            // the shortfall representative takes the bottom interval
            std::vector<double> bottom(x.atoms(), 0.0);
            int ke = snap_boundary(sp.sorted, 1.0 - asum);
            for (int s = 0; s < ke; ++s) {
                int orig = sp.perm[s];
                bottom[orig] = x.values()[orig];
            }
            std::vector<DistortionFn> av_fns;
            for (int i : red.averse) av_fns.push_back(eco.agents[i].h);
            averse_parts =
                comonotone_expand(av_fns, part_rv(x, bottom));
        }
        std::ostringstream note;
        note << "shortfall-plus-flats closed form, case " << (case_one ? "(i)" : "(ii)")
             << ": b = " << fmt(b) << ", sum(a) = " << fmt(asum)
             << ", min(a) = " << fmt(amin);
        return assemble(eco, red, scatter(averse_parts, seeking_parts), bench,
                        CaseTag::PwlPair, opts, note.str());
    }

    SharingSolution two = solve_lplus(g1, *red.seeking_rep, x, opts);
    std::vector<std::vector<double>> averse_parts = averse_zero;
    std::vector<std::vector<double>> seeking_parts(
        red.seeking.size(), std::vector<double>(x.atoms(), 0.0));
    if (two.allocation) {
        std::vector<DistortionFn> av_fns;
        for (int i : red.averse) av_fns.push_back(eco.agents[i].h);
        averse_parts = comonotone_expand(av_fns, two.allocation->component(0));
        seeking_parts = counter_expand(seek_fns, seek_curve,
                                       two.allocation->component(1), opts);
    }
    SharingSolution sol =
        assemble(eco, red, scatter(averse_parts, seeking_parts), two.benchmark,
                 two.method, opts,
                 "reduced two-agent solve; " + two.note);
    sol.lower_bound = std::min(sol.lower_bound, two.lower_bound);
    sol.exact = two.exact && std::abs(sol.value - two.value) <= opts.tol;
    sol.dyadic_gap = two.dyadic_gap;
    return sol;
}

DistortionFn pwl_group_composite(const std::vector<double>& b_list,
                                 const std::vector<double>& a_list) {
    if (b_list.empty() || a_list.empty())
        throw PreconditionError(
            "pwl_group_composite: not covered: both groups must be nonempty");
    for (double b : b_list)
        if (b <= kPosTol || b >= 1.0 + kPosTol)
            throw DomainError("pwl_group_composite: b levels must lie in (0, 1]");
    double asum = 0.0, amin = 1.0;
    for (double a : a_list) {
        if (a <= kPosTol || a >= 1.0 - kPosTol)
            throw DomainError("pwl_group_composite: a widths must lie in (0, 1)");
        asum += a;
        amin = std::min(amin, a);
    }
    if (asum > 1.0 + kPosTol)
        throw DomainError("pwl_group_composite: flat widths must sum to at most 1");
    double b = *std::max_element(b_list.begin(), b_list.end());
    if (asum >= 1.0 - kPosTol)
        return DistortionFn::piecewise_linear({{0.0, 0.0}, {1.0, 0.0}});
    double denom = amin + b <= 1.0 + kPosTol ? 1.0 - amin : b;
    return DistortionFn::piecewise_linear(
        {{0.0, 0.0}, {asum, 0.0}, {1.0, (1.0 - asum) / denom}});
}

SharingSolution pwl_n_agent(const std::vector<double>& b_list,
                            const std::vector<double>& a_list,
                            const LatticeRV& x, const SolveOptions& opts) {
    DistortionFn composite = pwl_group_composite(b_list, a_list);
    if (!x.nonnegative()) throw DomainError("pwl_n_agent: risk must be nonnegative");

    Economy eco{{}, x};
    for (std::size_t i = 0; i < b_list.size(); ++i)
        eco.agents.push_back({"averse" + std::to_string(i + 1),
                              DistortionFn::expected_shortfall(b_list[i]),
                              Attitude::Averse});
    for (std::size_t i = 0; i < a_list.size(); ++i)
        eco.agents.push_back({"seeking" + std::to_string(i + 1),
                              DistortionFn::flat_then_linear(a_list[i]),
                              Attitude::Seeking});
    Reduction red = reduce(eco, opts.grid_size);

    double b = *std::max_element(b_list.begin(), b_list.end());
    double asum = std::accumulate(a_list.begin(), a_list.end(), 0.0);
    double amin = *std::min_element(a_list.begin(), a_list.end());
    bool case_one = amin + b <= 1.0 + kPosTol;
    double bench = rho(composite, x);

    SortedSpace sp = sort_space(x);
    std::vector<std::pair<int, double>> widths;
    for (std::size_t i = 0; i < a_list.size(); ++i)
        widths.emplace_back(static_cast<int>(i), a_list[i]);
    auto seeking_parts = assign_intervals(
        x, sp, static_cast<int>(a_list.size()),
        stacked_flat_intervals(widths, case_one));
    std::vector<std::vector<double>> averse_parts(
        b_list.size(), std::vector<double>(x.atoms(), 0.0));
    if (!case_one && asum < 1.0 - kPosTol) {
        std::vector<double> bottom(x.atoms(), 0.0);
        int ke = snap_boundary(sp.sorted, 1.0 - asum);
        for (int s = 0; s < ke; ++s) {
            int orig = sp.perm[s];
            bottom[orig] = x.values()[orig];
        }
        std::vector<DistortionFn> av_fns;
        for (std::size_t i = 0; i < b_list.size(); ++i)
            av_fns.push_back(eco.agents[i].h);
        averse_parts = comonotone_expand(av_fns, part_rv(x, bottom));
    }

    std::vector<std::vector<double>> parts;
    parts.reserve(b_list.size() + a_list.size());
    for (auto& p : averse_parts) parts.push_back(std::move(p));
    for (auto& p : seeking_parts) parts.push_back(std::move(p));
    std::ostringstream note;
    note << "case " << (case_one ? "(i)" : "(ii)") << ": composite slope "
         << fmt(1.0 / (case_one ? 1.0 - amin : b)) << " after flat width "
         << fmt(asum);
    return assemble(eco, red, std::move(parts), bench, CaseTag::PwlPair, opts,
                    note.str());
}

} // namespace riskshare
