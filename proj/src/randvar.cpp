#include "riskshare/randvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace riskshare {

namespace {

constexpr double kProbTol = 1e-9;

void check_probs(const std::vector<double>& probs) {
    double sum = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < -1e-15)
            throw DomainError("probabilities must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol)
        throw DomainError("probabilities must sum to 1");
}

// Core layer evaluation: sum_k h(P(X >= u_k)) * (u_k - u_{k-1}) over the
// distinct values 0 <= u_1 < ... of the points (value, prob).
template <typename H>
double layered_value(H&& h, std::vector<std::pair<double, double>> pts) {
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    // walk values descending, collecting (distinct value, survival prob)
    std::vector<std::pair<double, double>> levels;
    double surv = 0.0;
    for (const auto& [v, p] : pts) {
        if (p <= 0.0) continue;
        surv += p;
        if (!levels.empty() && levels.back().first == v)
            levels.back().second = surv;
        else
            levels.emplace_back(v, surv);
    }
    double out = 0.0;
    double prev = 0.0;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        double s = std::clamp(it->second, 0.0, 1.0);
        if (it->first > prev) out += h(s) * (it->first - prev);
        prev = it->first;
    }
    return out;
}

std::vector<std::pair<double, double>> lattice_points(const LatticeRV& x) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(x.atoms());
    for (int k = 0; k < x.atoms(); ++k)
        pts.emplace_back(x.values()[k], x.probs()[k]);
    return pts;
}

void require_nonneg(const LatticeRV& x) {
    if (!x.nonnegative())
        throw DomainError("rho: lattice variable has negative values; use a "
                          "DiscreteRV for signed inputs");
}

} // namespace

LatticeRV::LatticeRV(std::vector<double> values, std::vector<double> probs)
    : values_(std::move(values)), probs_(std::move(probs)) {
    if (values_.empty()) throw DomainError("lattice: no atoms");
    if (values_.size() != probs_.size())
        throw DomainError("lattice: values/probs size mismatch");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("lattice: non-finite value");
    check_probs(probs_);
    cum_.resize(values_.size() + 1, 0.0);
    for (std::size_t k = 0; k < probs_.size(); ++k)
        cum_[k + 1] = cum_[k] + probs_[k];
    cum_.back() = 1.0;
}

LatticeRV LatticeRV::uniform(std::vector<double> values) {
    if (values.empty()) throw DomainError("lattice: no atoms");
    std::vector<double> probs(values.size(),
                              1.0 / static_cast<double>(values.size()));
    return LatticeRV(std::move(values), std::move(probs));
}

LatticeRV LatticeRV::weighted(std::vector<double> values, std::vector<double> probs) {
    return LatticeRV(std::move(values), std::move(probs));
}

double LatticeRV::min_value() const {
    return *std::min_element(values_.begin(), values_.end());
}

double LatticeRV::max_value() const {
    return *std::max_element(values_.begin(), values_.end());
}

double LatticeRV::mean() const {
    double m = 0.0;
    for (int k = 0; k < atoms(); ++k) m += values_[k] * probs_[k];
    return m;
}

bool LatticeRV::nonnegative() const { return min_value() >= -1e-12; }

double LatticeRV::prob_positive() const {
    double p = 0.0;
    for (int k = 0; k < atoms(); ++k)
        if (values_[k] > 1e-12) p += probs_[k];
    return p;
}

std::vector<int> LatticeRV::order_by_value() const {
    std::vector<int> idx(values_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return values_[a] < values_[b]; });
    return idx;
}

LatticeRV LatticeRV::split_atoms() const {
    std::vector<double> v, p;
    v.reserve(values_.size() * 2);
    p.reserve(values_.size() * 2);
    for (std::size_t k = 0; k < values_.size(); ++k) {
        v.push_back(values_[k]);
        v.push_back(values_[k]);
        p.push_back(probs_[k] / 2.0);
        p.push_back(probs_[k] / 2.0);
    }
    return LatticeRV(std::move(v), std::move(p));
}

DiscreteRV::DiscreteRV(std::vector<std::pair<double, double>> support)
    : support_(std::move(support)) {
    if (support_.empty()) throw DomainError("discrete: empty support");
    std::sort(support_.begin(), support_.end());
    std::vector<double> probs;
    probs.reserve(support_.size());
    for (const auto& [v, p] : support_) {
        if (!std::isfinite(v)) throw DomainError("discrete: non-finite value");
        probs.push_back(p);
    }
    for (std::size_t i = 1; i < support_.size(); ++i)
        if (support_[i].first - support_[i - 1].first <= 1e-14)
            throw DomainError("discrete: support values must be distinct");
    check_probs(probs);
}

DiscreteRV DiscreteRV::from_support(std::vector<std::pair<double, double>> support) {
    return DiscreteRV(std::move(support));
}

DiscreteRV DiscreteRV::bernoulli(double p, double a) {
    if (p < -1e-15 || p > 1.0 + 1e-15) throw DomainError("bernoulli: p outside [0, 1]");
    p = std::clamp(p, 0.0, 1.0);
    if (p >= 1.0) return constant(a);
    if (p <= 0.0 || std::abs(a) <= 1e-15) return constant(0.0);
    return DiscreteRV({{0.0, 1.0 - p}, {a, p}});
}

DiscreteRV DiscreteRV::constant(double c) { return DiscreteRV({{c, 1.0}}); }

double DiscreteRV::mean() const {
    double m = 0.0;
    for (const auto& [v, p] : support_) m += v * p;
    return m;
}

double DiscreteRV::prob_positive() const {
    double p = 0.0;
    for (const auto& [v, q] : support_)
        if (v > 1e-12) p += q;
    return p;
}

LatticeRV Allocation::component(int i) const {
    return LatticeRV::weighted(parts.at(i), total.probs());
}

std::vector<LatticeRV> Allocation::components() const {
    std::vector<LatticeRV> out;
    out.reserve(parts.size());
    for (int i = 0; i < agents(); ++i) out.push_back(component(i));
    return out;
}

void Allocation::validate(bool l_plus) const {
    if (parts.empty()) throw DomainError("allocation: no components");
    for (const auto& p : parts)
        if (static_cast<int>(p.size()) != total.atoms())
            throw DomainError("allocation: component size mismatch");
    for (int k = 0; k < total.atoms(); ++k) {
        double sum = 0.0;
        for (const auto& p : parts) sum += p[k];
        if (std::abs(sum - total.values()[k]) > 1e-9) {
            std::ostringstream os;
            os << "allocation: components sum to " << sum << " != "
               << total.values()[k] << " on atom " << k;
            throw DomainError(os.str());
        }
        if (l_plus) {
            for (const auto& p : parts) {
                if (p[k] < -1e-12 || p[k] > total.values()[k] + 1e-12)
                    throw DomainError("allocation: component outside [0, total]");
            }
        }
    }
}

double rho(const DistortionFn& h, const LatticeRV& x) {
    require_nonneg(x);
    return layered_value([&](double t) { return h(t); }, lattice_points(x));
}

double rho(const DistortionFn& h, const DiscreteRV& x) {
    return rho_fn([&](double t) { return h(t); }, h.at_one(), x);
}

double rho_fn(const std::function<double(double)>& h, const LatticeRV& x) {
    require_nonneg(x);
    return layered_value(h, lattice_points(x));
}

double rho_fn(const std::function<double(double)>& h, double h_at_one,
              const DiscreteRV& x) {
    double shift_by = std::min(x.min_value(), 0.0);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(x.support().size());
    for (const auto& [v, p] : x.support()) pts.emplace_back(v - shift_by, p);
    return shift_by * h_at_one + layered_value(h, std::move(pts));
}

double rho_curve(const InfConvCurve& w, const LatticeRV& x) {
    require_nonneg(x);
    return layered_value([&](double t) { return w.refined_value_at(t); },
                         lattice_points(x));
}

double rho_curve(const InfConvCurve& w, const DiscreteRV& x) {
    return rho_fn([&](double t) { return w.refined_value_at(t); },
                  w.refined_value_at(1.0), x);
}

double var_at(double alpha, const LatticeRV& x) {
    require_nonneg(x);
    if (alpha < -1e-12 || alpha > 1.0 + 1e-12)
        throw DomainError("var_at: alpha outside [0, 1]");
    return rho_fn([&](double t) { return t > alpha ? 1.0 : 0.0; }, x);
}

double var_at(double alpha, const DiscreteRV& x) {
    if (alpha < -1e-12 || alpha > 1.0 + 1e-12)
        throw DomainError("var_at: alpha outside [0, 1]");
    return rho_fn([&](double t) { return t > alpha ? 1.0 : 0.0; },
                  alpha >= 1.0 ? 0.0 : 1.0, x);
}

double es_at(double alpha, const LatticeRV& x) {
    if (alpha <= 1e-15) return var_at(0.0, x);
    return rho(DistortionFn::expected_shortfall(alpha), x);
}

double es_at(double alpha, const DiscreteRV& x) {
    if (alpha <= 1e-15) return var_at(0.0, x);
    return rho(DistortionFn::expected_shortfall(alpha), x);
}

namespace {

bool pairwise_dependence(const std::vector<LatticeRV>& components, bool counter) {
    if (components.size() < 2) return true;
    const int n = static_cast<int>(components.size());
    const int atoms = components[0].atoms();
    for (const auto& c : components) {
        if (c.atoms() != atoms)
            throw DomainError("dependence check: components on different spaces");
        for (int k = 0; k < atoms; ++k)
            if (std::abs(c.probs()[k] - components[0].probs()[k]) > 1e-12)
                throw DomainError("dependence check: probabilities differ");
    }
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const auto& va = components[a].values();
            const auto& vb = components[b].values();
            for (int i = 0; i < atoms; ++i) {
                if (components[a].probs()[i] <= 0.0) continue;
                for (int j = i + 1; j < atoms; ++j) {
                    if (components[a].probs()[j] <= 0.0) continue;
                    double cross = (va[i] - va[j]) * (vb[i] - vb[j]);
                    if (!counter && cross < -1e-12) return false;
                    if (counter && cross > 1e-12) return false;
                }
            }
        }
    }
    return true;
}

} // namespace

bool is_comonotonic(const std::vector<LatticeRV>& components) {
    return pairwise_dependence(components, false);
}

bool is_counter_monotonic(const std::vector<LatticeRV>& components) {
    return pairwise_dependence(components, true);
}

std::vector<LayerEvent> layer_decompose(const LatticeRV& x, int n) {
    require_nonneg(x);
    if (n < 1 || n > 40) throw DomainError("layer_decompose: n outside [1, 40]");
    double step = std::ldexp(1.0, -n);
    double top = x.max_value();
    auto levels = static_cast<long long>(std::floor(top / step + 1e-9));
    std::vector<LayerEvent> out;
    out.reserve(static_cast<std::size_t>(std::max(levels, 0ll)));
    for (long long k = 1; k <= levels; ++k) {
        LayerEvent ev;
        ev.level = static_cast<double>(k) * step;
        ev.mask.resize(x.atoms());
        ev.prob = 0.0;
        for (int a = 0; a < x.atoms(); ++a) {
            bool hit = x.values()[a] >= ev.level - 1e-12;
            ev.mask[a] = hit ? 1 : 0;
            if (hit) ev.prob += x.probs()[a];
        }
        out.push_back(std::move(ev));
    }
    return out;
}

LatticeRV lattice_from_discrete(const DiscreteRV& d, int atoms, double* max_snap) {
    if (atoms < 1) throw DomainError("lattice_from_discrete: need at least 1 atom");
    const auto& sup = d.support();
    std::vector<int> counts(sup.size(), 0);
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < sup.size(); ++i) {
        double raw = sup[i].second * atoms;
        counts[i] = static_cast<int>(std::floor(raw + 1e-12));
        assigned += counts[i];
        remainders.emplace_back(raw - counts[i], static_cast<int>(i));
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; k < atoms - assigned && k < static_cast<int>(remainders.size());
         ++k)
        counts[remainders[k].second] += 1;
    double snap = 0.0;
    std::vector<double> values;
    values.reserve(atoms);
    for (std::size_t i = 0; i < sup.size(); ++i) {
        snap = std::max(snap, std::abs(static_cast<double>(counts[i]) / atoms -
                                       sup[i].second));
        for (int c = 0; c < counts[i]; ++c) values.push_back(sup[i].first);
    }
    if (values.empty()) values.push_back(d.min_value());
    if (max_snap) *max_snap = snap;
    return LatticeRV::uniform(std::move(values));
}

} // namespace riskshare
