#include "riskshare/sharing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace riskshare {

std::string to_string(CaseTag tag) {
    switch (tag) {
        case CaseTag::Unbounded: return "UNBOUNDED";
        case CaseTag::Mirror: return "MIRROR";
        case CaseTag::ConcaveMin: return "CONCAVE_MIN";
        case CaseTag::ConvexDominated: return "CONVEX_DOMINATED";
        case CaseTag::VarLemma: return "VAR_LEMMA";
        case CaseTag::PwlPair: return "PWL_PAIR";
        case CaseTag::Bernoulli: return "BERNOULLI";
        case CaseTag::TwoIndicators: return "TWO_INDICATORS";
        case CaseTag::SmallProb: return "SMALL_PROB";
        case CaseTag::CoinSandwich: return "COIN_SANDWICH";
        case CaseTag::OracleOnly: return "ORACLE_ONLY";
    }
    return "UNKNOWN";
}

bool check_existence(const DistortionFn& h1, const DistortionFn& h2, int grid_size) {
    return dominates(h1, h2, grid_size);
}

namespace {

constexpr double kPosTol = 1e-12;

void require_normalized(const DistortionFn& h) {
    if (std::abs(h.at_one() - 1.0) > 1e-9)
        throw DomainError("sharing: agent distortion must satisfy h(1) = 1; got h(1) = " +
                          std::to_string(h.at_one()));
}

DiscreteRV to_discrete(const LatticeRV& x) {
    std::map<double, double> agg;
    for (int k = 0; k < x.atoms(); ++k)
        if (x.probs()[k] > 0.0) agg[x.values()[k]] += x.probs()[k];
    if (agg.empty()) return DiscreteRV::constant(x.values()[0]);
    std::vector<std::pair<double, double>> support(agg.begin(), agg.end());
    return DiscreteRV::from_support(std::move(support));
}

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

// Boundary index (0..N) whose cumulative probability is nearest to target.
int snap_boundary(const LatticeRV& sorted, double target, int lo_index, int hi_index) {
    int best = lo_index;
    double best_err = std::numeric_limits<double>::infinity();
    for (int k = lo_index; k <= hi_index; ++k) {
        double bound = k == 0 ? 0.0 : sorted.u_high(k - 1);
        double err = std::abs(bound - target);
        if (err < best_err - 1e-18) {
            best_err = err;
            best = k;
        }
    }
    return best;
}

Allocation two_part_allocation(const LatticeRV& x, const SortedSpace& sp,
                               const std::vector<double>& y_sorted, int y_agent) {
    std::vector<double> y(x.atoms(), 0.0), z(x.atoms(), 0.0);
    for (int s = 0; s < x.atoms(); ++s) {
        int orig = sp.perm[s];
        y[orig] = y_sorted[s];
        z[orig] = x.values()[orig] - y_sorted[s];
    }
    Allocation a{x, {}};
    if (y_agent == 0)
        a.parts = {std::move(y), std::move(z)};
    else
        a.parts = {std::move(z), std::move(y)};
    a.validate(true);
    return a;
}

double pair_rho(const DistortionFn& h1, const DistortionFn& h2, const Allocation& a) {
    return rho(h1, a.component(0)) + rho(h2, a.component(1));
}

// Share of X above the snapped uniform boundary 1 - q goes to y.
std::vector<double> tail_share(const SortedSpace& sp, double q) {
    const auto& s = sp.sorted;
    int kb = snap_boundary(s, 1.0 - q, 0, s.atoms());
    std::vector<double> y(s.atoms(), 0.0);
    for (int k = kb; k < s.atoms(); ++k) y[k] = s.values()[k];
    return y;
}

// One layer of thickness delta above prev assigned to the pointwise cheaper
// agent; produces the allocation achieving rho of the pointwise minimum.
Allocation layered_argmin(const DistortionFn& h1, const DistortionFn& h2,
                          const LatticeRV& x) {
    std::vector<double> p0(x.atoms(), 0.0), p1(x.atoms(), 0.0);
    // distinct levels ascending with survival probabilities
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k < x.atoms(); ++k)
        if (x.probs()[k] > 0.0) pts.emplace_back(x.values()[k], x.probs()[k]);
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::pair<double, double>> levels; // (value, survival)
    double surv = 0.0;
    for (const auto& [v, p] : pts) {
        surv += p;
        if (!levels.empty() && levels.back().first == v)
            levels.back().second = surv;
        else
            levels.emplace_back(v, surv);
    }
    std::reverse(levels.begin(), levels.end());
    double prev = 0.0;
    for (const auto& [lvl, sv] : levels) {
        if (lvl <= prev) continue;
        double delta = lvl - prev;
        double s = std::clamp(sv, 0.0, 1.0);
        bool first = h1(s) <= h2(s) + 1e-15;
        for (int k = 0; k < x.atoms(); ++k) {
            if (x.values()[k] >= lvl - kPosTol) {
                (first ? p0 : p1)[k] += delta;
            }
        }
        prev = lvl;
    }
    Allocation a{x, {std::move(p0), std::move(p1)}};
    a.validate(true);
    return a;
}

double min_fn_rho(const DistortionFn& h1, const DistortionFn& h2, const DiscreteRV& x) {
    return rho_fn([&](double t) { return std::min(h1(t), h2(t)); },
                  std::min(h1.at_one(), h2.at_one()), x);
}

// Identify min{t/b, 1}; returns b.
std::optional<double> es_level(const DistortionFn& h) {
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
    if (b <= 1e-12) return std::nullopt;
    for (const auto& [x, y] : *knots)
        if (std::abs(y - std::min(x / b, 1.0)) > kPosTol) return std::nullopt;
    return b;
}

// Identify max{0, (t-a)/(1-a)} with a > 0; returns a.
std::optional<double> flat_level(const DistortionFn& h) {
    auto knots = h.as_knots();
    if (!knots) return std::nullopt;
    if (std::abs(knots->back().second - 1.0) > kPosTol) return std::nullopt;
    double a = alpha_of(h);
    if (a <= 1e-12 || a >= 1.0 - 1e-12) return std::nullopt;
    for (const auto& [x, y] : *knots)
        if (std::abs(y - std::max(0.0, (x - a) / (1.0 - a))) > kPosTol)
            return std::nullopt;
    return a;
}

struct PwlRoles {
    int conv_agent;
    int es_agent;
    double a;
    double b;
};

std::optional<PwlRoles> pwl_roles(const DistortionFn& h1, const DistortionFn& h2) {
    if (auto a = flat_level(h1)) {
        if (auto b = es_level(h2)) return PwlRoles{0, 1, *a, *b};
    }
    if (auto a = flat_level(h2)) {
        if (auto b = es_level(h1)) return PwlRoles{1, 0, *a, *b};
    }
    return std::nullopt;
}

bool curve_concave(const InfConvCurve& curve) {
    const auto& v = curve.grid_values();
    for (std::size_t i = 2; i < v.size(); ++i)
        if (v[i] - 2.0 * v[i - 1] + v[i - 2] > kTol) return false;
    return true;
}

bool curve_convex(const InfConvCurve& curve) {
    const auto& v = curve.grid_values();
    for (std::size_t i = 2; i < v.size(); ++i)
        if (v[i] - 2.0 * v[i - 1] + v[i - 2] < -kTol) return false;
    return true;
}

double lower_bound_generic(const InfConvCurve& curve, const DiscreteRV& x) {
    double lb = 0.0;
    const auto& v = curve.grid_values();
    int g = curve.grid_size();
    double slope = std::numeric_limits<double>::infinity();
    for (int i = 1; i < g; ++i)
        slope = std::min(slope, v[i] / grid_point(i, g));
    if (std::isfinite(slope)) lb = std::max(lb, slope * x.mean());
    if (curve_concave(curve) ||
        (curve_convex(curve) && x.prob_positive() <= 0.5 + kPosTol))
        lb = std::max(lb, rho_curve(curve, x));
    return lb;
}

// Largest x (rounded down one grid step) where the curve still equals the
// convex agent's distortion.
double equality_threshold(const InfConvCurve& curve, const DistortionFn& conv) {
    int g = curve.grid_size();
    int last = 0;
    for (int i = 0; i < g; ++i) {
        double t = grid_point(i, g);
        if (conv(t) - curve.value_at(t) > kPosTol) break;
        last = i;
    }
    return grid_point(std::max(last - 1, 0), g);
}

// Largest x (rounded down) below which the convex agent's slope stays <= 1.
double slope_threshold(const DistortionFn& conv, int grid_size) {
    if (const auto* p = std::get_if<detail::PowerNode>(&conv.node())) {
        if (p->beta <= 1.0 + kPosTol) return 1.0;
        return std::pow(1.0 / p->beta, 1.0 / (p->beta - 1.0));
    }
    if (auto knots = conv.as_knots()) {
        double xd = 0.0;
        for (std::size_t i = 1; i < knots->size(); ++i) {
            double s = ((*knots)[i].second - (*knots)[i - 1].second) /
                       ((*knots)[i].first - (*knots)[i - 1].first);
            if (s > 1.0 + kTol) break;
            xd = (*knots)[i].first;
        }
        return xd;
    }
    double xd = 0.0;
    double prev = conv(0.0);
    for (int i = 1; i < grid_size; ++i) {
        double t = grid_point(i, grid_size);
        double cur = conv(t);
        if ((cur - prev) * static_cast<double>(grid_size - 1) > 1.0 + kTol) break;
        xd = t;
        prev = cur;
    }
    return std::max(xd - 1.0 / static_cast<double>(grid_size - 1), 0.0);
}

struct SmallProbCheck {
    bool applies = false;
    int conv_agent = -1;
    double threshold = 0.0;
    double x_c = 0.0;
    double x_d = 0.0;
    bool used_concave_relaxation = false;
};

SmallProbCheck small_prob_check(const DistortionFn& h1, const DistortionFn& h2,
                                const InfConvCurve& curve, double prob_positive,
                                int grid_size) {
    SmallProbCheck out;
    for (int conv_agent : {1, 0}) {
        const DistortionFn& conv = conv_agent == 0 ? h1 : h2;
        const DistortionFn& other = conv_agent == 0 ? h2 : h1;
        if (!is_convex(conv, grid_size)) continue;
        out.conv_agent = conv_agent;
        out.x_c = equality_threshold(curve, conv);
        out.threshold = out.x_c / 2.0;
        if (is_concave(other, grid_size)) {
            out.x_d = slope_threshold(conv, grid_size);
            if (out.x_d > out.threshold) {
                out.threshold = out.x_d;
                out.used_concave_relaxation = true;
            }
        }
        if (prob_positive <= out.threshold + kPosTol) {
            out.applies = true;
            return out;
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// Greedy event selection: consume pool atoms in order, stopping at the
// cumulative probability nearest the target.
std::vector<int> pick_atoms(const LatticeRV& x, const std::vector<int>& pool,
                            double target) {
    std::vector<int> chosen;
    double cum = 0.0;
    for (int atom : pool) {
        double p = x.probs()[atom];
        if (std::abs(cum + p - target) <= std::abs(cum - target) + 1e-18) {
            chosen.push_back(atom);
            cum += p;
        } else {
            break;
        }
    }
    return chosen;
}

struct CaseOutcome {
    double bench = 0.0;
    double achieved = 0.0;
    std::optional<Allocation> allocation;
};

SharingSolution finish_case(CaseTag tag, const CaseOutcome& oc, bool have_lattice,
                            const SolveOptions& opts, std::string note) {
    SharingSolution sol;
    sol.method = tag;
    sol.benchmark = oc.bench;
    if (have_lattice) {
        sol.value = oc.achieved;
        sol.upper_bound = oc.achieved;
        sol.lower_bound = std::min(oc.bench, oc.achieved);
        sol.exact = std::abs(oc.achieved - oc.bench) <= opts.tol;
        sol.allocation = oc.allocation;
    } else {
        sol.value = oc.bench;
        sol.upper_bound = oc.bench;
        sol.lower_bound = oc.bench;
        sol.exact = true;
    }
    sol.note = std::move(note);
    return sol;
}

SharingSolution solve_lplus_impl(const DistortionFn& h1, const DistortionFn& h2,
                                 const LatticeRV* lat, const DiscreteRV& dist,
                                 const SolveOptions& opts) {
    require_normalized(h1);
    // the second argument may be a bounded-variation group representative
    if (h2.at_one() > 1.0 + 1e-9 || h2.at_one() < -kPosTol)
        throw DomainError("solve_lplus: second distortion must satisfy h(1) <= 1");
    if (!dist.nonnegative())
        throw DomainError("solve_lplus: risk must be nonnegative");
    const int g = opts.grid_size;
    SharingSolution sol;

    if (dist.max_value() <= kPosTol) {
        CaseOutcome oc;
        if (lat) {
            Allocation a{*lat,
                         {std::vector<double>(lat->atoms(), 0.0), lat->values()}};
            a.validate(true);
            oc.allocation = std::move(a);
        }
        return finish_case(CaseTag::Bernoulli, oc, lat != nullptr, opts,
                           "zero risk, zero value");
    }

    InfConvCurve curve = infconv_fn({h1, h2}, g);
    std::optional<SortedSpace> sp;
    if (lat) sp = sort_space(*lat);

    // support classification
    std::vector<std::pair<double, double>> positives;
    for (const auto& [v, p] : dist.support())
        if (v > kPosTol) positives.emplace_back(v, p);

    if (h1.is_var() || h2.is_var()) {
        int vi = h1.is_var() ? 0 : 1;
        const DistortionFn& hv = vi == 0 ? h1 : h2;
        const DistortionFn& other = vi == 0 ? h2 : h1;
        double alpha = std::min(std::get<detail::VaRNode>(hv.node()).alpha, 1.0);
        CaseOutcome oc;
        oc.bench = rho(shift(other, alpha), dist);
        std::ostringstream note;
        note << "value-at-risk agent absorbs the top " << fmt(alpha)
             << " tail; remaining agent prices the shifted distortion";
        if (lat) {
            auto y = tail_share(*sp, alpha);
            Allocation a = two_part_allocation(*lat, *sp, y, vi);
            oc.achieved = pair_rho(h1, h2, a);
            oc.allocation = std::move(a);
        }
        SharingSolution out =
            finish_case(CaseTag::VarLemma, oc, lat != nullptr, opts, note.str());
        // atoms that cannot carry the exact tail cut fall through to the
        // shape-specific and generic constructions below
        if (!lat || out.exact) return out;
    }

    if (auto roles = pwl_roles(h1, h2);
        roles && roles->a + roles->b >= 1.0 - kPosTol) {
        DistortionFn w_fn = DistortionFn::piecewise_linear(
            {{0.0, 0.0}, {roles->a, 0.0}, {1.0, (1.0 - roles->a) / roles->b}});
        CaseOutcome oc;
        oc.bench = rho(w_fn, dist);
        std::ostringstream note;
        note << "piecewise-linear pair: flat width " << fmt(roles->a)
             << ", shortfall level " << fmt(roles->b)
             << "; convex agent takes the top tail of width " << fmt(roles->a);
        if (lat) {
            auto y = tail_share(*sp, roles->a);
            Allocation a = two_part_allocation(*lat, *sp, y, roles->conv_agent);
            oc.achieved = pair_rho(h1, h2, a);
            oc.allocation = std::move(a);
        }
        SharingSolution out =
            finish_case(CaseTag::PwlPair, oc, lat != nullptr, opts, note.str());
        if (!lat || out.exact) return out;
    }

    if (positives.size() == 1) {
        const double a = positives[0].first;
        const double p = positives[0].second;
        CaseOutcome oc;
        oc.bench = a * curve.refined_value_at(p);
        double u = std::clamp(curve.refined_split_at(p)[0], 0.0, p);
        std::ostringstream note;
        note << "Bernoulli layer: height " << fmt(a) << ", probability " << fmt(p)
             << ", first-agent share of the event " << fmt(u);
        if (lat) {
            const auto& s = sp->sorted;
            // event B sits at the bottom of the tail (1-p, 1-p+u]
            int kb = snap_boundary(s, 1.0 - p, 0, s.atoms());
            int ke = snap_boundary(s, 1.0 - p + u, kb, s.atoms());
            std::vector<double> y(s.atoms(), 0.0);
            for (int k = kb; k < ke; ++k) y[k] = s.values()[k];
            Allocation split = two_part_allocation(*lat, *sp, y, 0);
            Allocation corner1 = two_part_allocation(
                *lat, *sp, std::vector<double>(s.values()), 0);
            Allocation corner2 = two_part_allocation(
                *lat, *sp, std::vector<double>(s.atoms(), 0.0), 0);
            oc.achieved = pair_rho(h1, h2, split);
            oc.allocation = std::move(split);
            for (Allocation* cand : {&corner1, &corner2}) {
                double v = pair_rho(h1, h2, *cand);
                if (v < oc.achieved - 1e-15) {
                    oc.achieved = v;
                    oc.allocation = std::move(*cand);
                }
            }
        }
        return finish_case(CaseTag::Bernoulli, oc, lat != nullptr, opts, note.str());
    }

    if (positives.size() == 2) {
        const double v1 = positives[0].first, v2 = positives[1].first;
        const double p2 = positives[1].second;
        const double p1 = positives[0].second + p2; // P(X > 0)
        CaseOutcome oc;
        double w1 = curve.refined_value_at(p1);
        double w2 = curve.refined_value_at(p2);
        oc.bench = v1 * w1 + (v2 - v1) * w2;
        double u1 = std::clamp(curve.refined_split_at(p1)[0], 0.0, p1);
        double u2 = std::clamp(curve.refined_split_at(p2)[0], 0.0, p2);
        double r1 = p1 - u1, r2 = p2 - u2;
        int which_case;
        if (u1 <= u2 + kPosTol && r1 >= r2 - kPosTol)
            which_case = 2;
        else if (u1 >= u2 - kPosTol && r1 >= r2 - kPosTol)
            which_case = 3;
        else
            which_case = 4;
        std::ostringstream note;
        note << "two indicator layers: heights (" << fmt(v1) << ", " << fmt(v2)
             << "), probabilities (" << fmt(p1) << ", " << fmt(p2)
             << "), layer shares (" << fmt(u1) << ", " << fmt(u2)
             << "), nested-event case " << which_case;
        if (lat) {
            std::vector<int> top_pool, mid_pool;
            for (int k = 0; k < lat->atoms(); ++k) {
                if (lat->values()[k] >= v2 - kPosTol)
                    top_pool.push_back(k);
                else if (lat->values()[k] > kPosTol)
                    mid_pool.push_back(k);
            }
            std::vector<char> in_c(lat->atoms(), 0), in_d(lat->atoms(), 0);
            auto mark = [](const std::vector<int>& atoms, std::vector<char>& flag) {
                for (int a : atoms) flag[a] = 1;
            };
            auto probs_of = [&](const std::vector<int>& atoms) {
                double s = 0.0;
                for (int a : atoms) s += lat->probs()[a];
                return s;
            };
            if (which_case == 2) {
                auto c = pick_atoms(*lat, top_pool, u1);
                mark(c, in_c);
                mark(c, in_d);
                std::vector<int> rest;
                for (int a : top_pool)
                    if (!in_c[a]) rest.push_back(a);
                mark(pick_atoms(*lat, rest, std::max(u2 - probs_of(c), 0.0)), in_d);
            } else {
                auto d = pick_atoms(*lat, top_pool, u2);
                mark(d, in_d);
                mark(d, in_c);
                double pd = probs_of(d);
                if (which_case == 3) {
                    mark(pick_atoms(*lat, mid_pool, std::max(u1 - pd, 0.0)), in_c);
                } else {
                    mark(mid_pool, in_c);
                    std::vector<int> rest;
                    for (int a : top_pool)
                        if (!in_d[a]) rest.push_back(a);
                    double want = std::max(u1 - pd - probs_of(mid_pool), 0.0);
                    mark(pick_atoms(*lat, rest, want), in_c);
                }
            }
            std::vector<double> y(lat->atoms(), 0.0);
            for (int k = 0; k < lat->atoms(); ++k) {
                if (in_c[k]) y[k] += v1;
                if (in_d[k]) y[k] += v2 - v1;
            }
            std::vector<double> z(lat->atoms());
            for (int k = 0; k < lat->atoms(); ++k) z[k] = lat->values()[k] - y[k];
            Allocation a{*lat, {std::move(y), std::move(z)}};
            a.validate(true);
            oc.achieved = pair_rho(h1, h2, a);
            oc.allocation = std::move(a);
        }
        SharingSolution out =
            finish_case(CaseTag::TwoIndicators, oc, lat != nullptr, opts, note.str());
        if (lat && !out.exact) {
            // the closed form is an upper construction; keep the honest range
            out.lower_bound = std::min(out.lower_bound,
                                       lower_bound_generic(curve, dist));
        }
        return out;
    }

    for (int conv_agent : {1, 0}) {
        const DistortionFn& conv = conv_agent == 0 ? h1 : h2;
        const DistortionFn& other = conv_agent == 0 ? h2 : h1;
        if (std::abs(conv.at_one() - 1.0) > 1e-9) continue; // needs a dual
        if (!is_convex(conv, g)) continue;
        if (!dominates(other, conv, g)) continue;
        CaseOutcome oc;
        oc.bench = rho(conv, dist);
        if (lat) {
            std::vector<double> zeros(lat->atoms(), 0.0);
            Allocation a{*lat, {}};
            if (conv_agent == 1)
                a.parts = {zeros, lat->values()};
            else
                a.parts = {lat->values(), zeros};
            a.validate(true);
            oc.achieved = pair_rho(h1, h2, a);
            oc.allocation = std::move(a);
        }
        return finish_case(CaseTag::ConvexDominated, oc, lat != nullptr, opts,
                           "risk-seeking agent absorbs the whole risk");
    }

    if (auto spc = small_prob_check(h1, h2, curve, dist.prob_positive(), g);
        spc.applies) {
        const DistortionFn& conv = spc.conv_agent == 0 ? h1 : h2;
        CaseOutcome oc;
        oc.bench = rho(conv, dist);
        std::ostringstream note;
        note << "small positive support: P(X>0) = " << fmt(dist.prob_positive())
             << " <= threshold " << fmt(spc.threshold) << " (x_c = " << fmt(spc.x_c)
             << ", x_d = " << fmt(spc.x_d) << ")";
        if (lat) {
            std::vector<double> zeros(lat->atoms(), 0.0);
            Allocation a{*lat, {}};
            if (spc.conv_agent == 1)
                a.parts = {zeros, lat->values()};
            else
                a.parts = {lat->values(), zeros};
            a.validate(true);
            oc.achieved = pair_rho(h1, h2, a);
            oc.allocation = std::move(a);
        }
        return finish_case(CaseTag::SmallProb, oc, lat != nullptr, opts, note.str());
    }

    // terminal: pointwise-minimum layering, mirror pair, or the sandwich
    DistortionFn mn = min_of({h1, h2}, g);
    double mn_value = min_fn_rho(h1, h2, dist);
    bool mirror = same_function(h2, dual(h1), 1e-12, g) ||
                  same_function(h1, dual(h2), 1e-12, g);
    if (is_concave(mn, g) || mirror) {
        CaseOutcome oc;
        oc.bench = mn_value;
        if (lat) {
            Allocation a = layered_argmin(h1, h2, *lat);
            oc.achieved = pair_rho(h1, h2, a);
            oc.allocation = std::move(a);
        }
        return finish_case(is_concave(mn, g) ? CaseTag::ConcaveMin : CaseTag::Mirror,
                           oc, lat != nullptr, opts,
                           "layer-by-layer assignment to the cheaper agent");
    }

    sol.method = curve.selector_monotone() ? CaseTag::CoinSandwich : CaseTag::OracleOnly;
    sol.benchmark = rho_curve(curve, dist);
    sol.lower_bound = lower_bound_generic(curve, dist);
    double best = mn_value;
    std::optional<Allocation> best_alloc;
    if (lat) {
        Allocation layered = layered_argmin(h1, h2, *lat);
        best = pair_rho(h1, h2, layered);
        best_alloc = std::move(layered);
        if (curve.selector_monotone()) {
            Allocation coin = coin_construct(h1, h2, *lat, opts.dyadic_n, g);
            double v = pair_rho(h1, h2, coin);
            if (v < best) {
                best = v;
                best_alloc = std::move(coin);
            }
            sol.dyadic_gap = std::ldexp(1.0, -opts.dyadic_n);
        }
    } else {
        best = std::min({mn_value, rho(h1, dist), rho(h2, dist)});
    }
    sol.value = best;
    sol.upper_bound = best;
    sol.lower_bound = std::min(sol.lower_bound, best);
    sol.allocation = std::move(best_alloc);
    sol.exact = (sol.upper_bound - sol.lower_bound) <= opts.tol;
    std::ostringstream note;
    note << "sandwich: distribution-level curve value " << fmt(sol.benchmark)
         << ", lower bound " << fmt(sol.lower_bound);
    if (!curve.selector_monotone())
        note << "; curve selector not monotone, layered construction only";
    sol.note = note.str();
    return sol;
}

} // namespace

SharingSolution solve_lplus(const DistortionFn& h1, const DistortionFn& h2,
                            const LatticeRV& x, const SolveOptions& opts) {
    if (!x.nonnegative())
        throw DomainError("solve_lplus: lattice risk must be nonnegative");
    return solve_lplus_impl(h1, h2, &x, to_discrete(x), opts);
}

SharingSolution solve_lplus(const DistortionFn& h1, const DistortionFn& h2,
                            const DiscreteRV& x, const SolveOptions& opts) {
    return solve_lplus_impl(h1, h2, nullptr, x, opts);
}

SharingSolution solve_linf(const DistortionFn& h1, const DistortionFn& h2,
                           const DiscreteRV& x, const SolveOptions& opts) {
    require_normalized(h1);
    require_normalized(h2);
    const int g = opts.grid_size;
    SharingSolution sol;

    if (!check_existence(h1, h2, g)) {
        DistortionFn d2 = dual(h2);
        double worst = -std::numeric_limits<double>::infinity();
        double at = 0.0;
        for (int i = 0; i < g; ++i) {
            double t = grid_point(i, g);
            double gap = d2(t) - h1(t);
            if (gap > worst + 1e-15) {
                worst = gap;
                at = t;
            }
        }
        sol.method = CaseTag::Unbounded;
        sol.neg_infinity = true;
        sol.value = -std::numeric_limits<double>::infinity();
        sol.lower_bound = sol.value;
        sol.upper_bound = sol.value;
        sol.exact = true;
        sol.witness_prob = at;
        std::ostringstream note;
        note << "no finite optimum: dual gap " << fmt(worst) << " at probability "
             << fmt(at) << "; the side bets (a 1_A - a/2 scaled, P(A) = " << fmt(at)
             << ") drive the total to -infinity";
        sol.note = note.str();
        return sol;
    }

    auto canonical = [&]() {
        std::vector<double> v, p;
        for (const auto& [val, pr] : x.support()) {
            v.push_back(val);
            p.push_back(pr);
        }
        return LatticeRV::weighted(std::move(v), std::move(p));
    };

    DistortionFn mn = min_of({h1, h2}, g);
    if (is_concave(mn, g)) {
        sol.method = CaseTag::ConcaveMin;
        sol.value = min_fn_rho(h1, h2, x);
        sol.exact = true;
        sol.lower_bound = sol.upper_bound = sol.benchmark = sol.value;
        if (x.nonnegative()) {
            Allocation a = layered_argmin(h1, h2, canonical());
            sol.allocation = std::move(a);
        }
        sol.note = "pointwise minimum is a distortion in its own right; layered "
                   "assignment to the cheaper agent is optimal";
        return sol;
    }

    for (int conv_agent : {1, 0}) {
        const DistortionFn& conv = conv_agent == 0 ? h1 : h2;
        if (!is_convex(conv, g)) continue;
        sol.method = CaseTag::ConvexDominated;
        sol.value = rho(conv, x);
        sol.exact = true;
        sol.lower_bound = sol.upper_bound = sol.benchmark = sol.value;
        LatticeRV base = canonical();
        std::vector<double> zeros(base.atoms(), 0.0);
        Allocation a{base, {}};
        if (conv_agent == 1)
            a.parts = {zeros, base.values()};
        else
            a.parts = {base.values(), zeros};
        a.validate(false);
        sol.allocation = std::move(a);
        sol.note = "risk-seeking agent absorbs the whole risk";
        return sol;
    }

    bool mirror = same_function(h2, dual(h1), 1e-12, g) ||
                  same_function(h1, dual(h2), 1e-12, g);
    if (mirror) {
        sol.method = CaseTag::Mirror;
        sol.value = min_fn_rho(h1, h2, x);
        sol.exact = true;
        sol.lower_bound = sol.upper_bound = sol.benchmark = sol.value;
        if (x.nonnegative()) {
            Allocation a = layered_argmin(h1, h2, canonical());
            sol.allocation = std::move(a);
        }
        sol.note = "mirror pair: optimal value prices the pointwise minimum";
        return sol;
    }

    sol.method = CaseTag::OracleOnly;
    double lb = -std::numeric_limits<double>::infinity();
    for (int which : {0, 1}) {
        const DistortionFn& a = which == 0 ? h1 : h2;
        DistortionFn da = dual(a);
        double cand = rho_fn([&](double t) { return std::min(a(t), da(t)); }, 1.0, x);
        lb = std::max(lb, cand);
    }
    sol.lower_bound = lb;
    double ub = std::min(rho(h1, x), rho(h2, x));
    if (x.nonnegative()) ub = std::min(ub, min_fn_rho(h1, h2, x));
    sol.upper_bound = ub;
    sol.value = ub;
    sol.benchmark = ub;
    sol.exact = (sol.upper_bound - sol.lower_bound) <= opts.tol;
    sol.note = "no closed form applies; mirrored self-convolution lower bound with "
               "corner upper bound";
    return sol;
}

Allocation coin_construct(const DistortionFn& h1, const DistortionFn& h2,
                          const LatticeRV& x, int dyadic_n, int grid_size) {
    if (!x.nonnegative())
        throw DomainError("coin_construct: risk must be nonnegative");
    InfConvCurve curve = infconv_fn({h1, h2}, grid_size);
    if (!curve.selector_monotone())
        throw DomainError("coin_construct: curve selector is not monotone; the "
                          "layered construction does not apply");
    SortedSpace sp = sort_space(x);
    auto layers = layer_decompose(sp.sorted, dyadic_n);
    const int atom_count = x.atoms();
    std::vector<double> y_sorted(atom_count, 0.0);
    const std::size_t levels = layers.size();
    if (levels > 0) {
        std::vector<double> u(levels), p(levels);
        for (std::size_t k = 0; k < levels; ++k) {
            p[k] = layers[k].prob;
            u[k] = std::clamp(curve.refined_split_at(p[k])[0], 0.0, p[k]);
        }
        for (std::size_t k = 1; k < levels; ++k) {
            u[k] = std::min(u[k], u[k - 1]);
            u[k] = std::max(u[k], u[k - 1] - (p[k - 1] - p[k]));
            u[k] = std::clamp(u[k], 0.0, p[k]);
        }
        for (std::size_t k = 0; k < levels; ++k) {
            double u_next = k + 1 < levels ? u[k + 1] : 0.0;
            double p_next = k + 1 < levels ? p[k + 1] : 0.0;
            double width = u[k] - u_next;
            if (width <= 1e-15) continue;
            double el = 1.0 - p[k];
            double cap = 1.0 - p_next;
            double target = std::min(el + width, cap);
            // block of atoms in (el, target], snapped to atom boundaries
            int kb = snap_boundary(sp.sorted, el, 0, atom_count);
            int ke = snap_boundary(sp.sorted, target, kb, atom_count);
            for (int s = kb; s < ke; ++s) y_sorted[s] = layers[k].level;
        }
    }
    return two_part_allocation(x, sp, y_sorted, 0);
}

std::pair<double, double> power_family_split(double alpha, double beta, double x) {
    if (!(alpha > 1.0) || !(beta > alpha))
        throw DomainError("power_family_split: need 1 < alpha < beta");
    if (x < -kPosTol || x > 1.0 + kPosTol)
        throw DomainError("power_family_split: x outside [0, 1]");
    x = std::clamp(x, 0.0, 1.0);
    double p0 = std::pow(alpha / beta, 1.0 / (beta - 1.0));
    if (x <= p0) return {0.0, x};
    auto deriv = [&](double y) {
        return alpha * std::pow(1.0 - y, alpha - 1.0) -
               beta * std::pow(x - y, beta - 1.0);
    };
    double lo = 0.0, hi = x;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (deriv(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double y = 0.5 * (lo + hi);
    return {y, x - y};
}

SharingSolution small_prob_case(const DistortionFn& h1, const DistortionFn& h2,
                                const LatticeRV& x, const SolveOptions& opts) {
    require_normalized(h1);
    require_normalized(h2);
    if (!x.nonnegative())
        throw DomainError("small_prob_case: risk must be nonnegative");
    DiscreteRV dist = to_discrete(x);
    InfConvCurve curve = infconv_fn({h1, h2}, opts.grid_size);
    auto spc = small_prob_check(h1, h2, curve, dist.prob_positive(), opts.grid_size);
    if (spc.conv_agent < 0)
        throw PreconditionError("small_prob_case: neither agent is risk seeking");
    if (!spc.applies) {
        std::ostringstream os;
        os << "small_prob_case: P(X>0) = " << fmt(dist.prob_positive())
           << " exceeds the admissible threshold " << fmt(spc.threshold)
           << " (x_c = " << fmt(spc.x_c) << ", x_d = " << fmt(spc.x_d) << ")";
        throw PreconditionError(os.str());
    }
    const DistortionFn& conv = spc.conv_agent == 0 ? h1 : h2;
    SharingSolution sol;
    sol.method = CaseTag::SmallProb;
    sol.value = rho(conv, x);
    sol.exact = true;
    sol.lower_bound = sol.upper_bound = sol.benchmark = sol.value;
    std::vector<double> zeros(x.atoms(), 0.0);
    Allocation a{x, {}};
    if (spc.conv_agent == 1)
        a.parts = {zeros, x.values()};
    else
        a.parts = {x.values(), zeros};
    a.validate(true);
    sol.allocation = std::move(a);
    std::ostringstream note;
    note << "small positive support: threshold " << fmt(spc.threshold)
         << " (x_c = " << fmt(spc.x_c) << ", x_d = " << fmt(spc.x_d) << ")";
    sol.note = note.str();
    return sol;
}

std::pair<double, double> indicator_plus_constant_bounds(const DistortionFn& h1,
                                                         const DistortionFn& h2,
                                                         double p, double c,
                                                         int grid_size) {
    if (p < -kPosTol || p > 1.0 + kPosTol)
        throw DomainError("indicator_plus_constant_bounds: p outside [0, 1]");
    if (c < -kPosTol)
        throw DomainError("indicator_plus_constant_bounds: c must be nonnegative");
    p = std::clamp(p, 0.0, 1.0);
    c = std::max(c, 0.0);
    InfConvCurve curve = infconv_fn({h1, h2}, grid_size);
    double w1 = curve.refined_value_at(1.0);
    double wp = curve.refined_value_at(p);
    return {std::max(wp, c * w1), c * w1 + wp};
}

} // namespace riskshare
