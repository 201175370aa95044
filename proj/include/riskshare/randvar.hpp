#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "riskshare/distortion.hpp"
#include "riskshare/infconv.hpp"

namespace riskshare {

// A random variable on an explicit finite probability space. Atom k has
// probability probs()[k] and owns the uniform sub-interval
// (u_low(k), u_high(k)] of (0, 1].
class LatticeRV {
public:
    static LatticeRV uniform(std::vector<double> values);
    static LatticeRV weighted(std::vector<double> values, std::vector<double> probs);

    int atoms() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& probs() const { return probs_; }
    double u_low(int k) const { return cum_[k]; }
    double u_high(int k) const { return cum_[k + 1]; }

    double min_value() const;
    double max_value() const;
    double mean() const;
    bool nonnegative() const;
    double prob_positive() const;
    // Atom indices ordered by increasing value (stable).
    std::vector<int> order_by_value() const;
    // Same distribution, atoms split in half (each atom becomes two atoms of
    // half the probability); used for refinement probes.
    LatticeRV split_atoms() const;

private:
    LatticeRV(std::vector<double> values, std::vector<double> probs);
    std::vector<double> values_;
    std::vector<double> probs_;
    std::vector<double> cum_;
};

// A distribution given by its support; values are distinct, probabilities
// sum to one. Values may be negative.
class DiscreteRV {
public:
    // support entries are (value, probability)
    static DiscreteRV from_support(std::vector<std::pair<double, double>> support);
    static DiscreteRV bernoulli(double p, double a = 1.0);
    static DiscreteRV constant(double c);

    const std::vector<std::pair<double, double>>& support() const { return support_; }
    double min_value() const { return support_.front().first; }
    double max_value() const { return support_.back().first; }
    double mean() const;
    bool nonnegative() const { return min_value() >= -1e-12; }
    double prob_positive() const;
    bool is_constant() const { return support_.size() == 1; }

private:
    explicit DiscreteRV(std::vector<std::pair<double, double>> support);
    std::vector<std::pair<double, double>> support_;
};

// n component payoffs on a common lattice, summing atomwise to the total.
struct Allocation {
    LatticeRV total;
    std::vector<std::vector<double>> parts; // [agent][atom]

    int agents() const { return static_cast<int>(parts.size()); }
    LatticeRV component(int i) const;
    std::vector<LatticeRV> components() const;
    // Throws DomainError when parts do not sum to the total within 1e-9, or
    // (with l_plus) leave [0, total].
    void validate(bool l_plus = true) const;
};

// Distortion risk measure rho_h(X) = sum over the layers of X of
// h(P(X >= u)) * layer thickness; exact on finite spaces.
double rho(const DistortionFn& h, const LatticeRV& x); // requires x >= 0
double rho(const DistortionFn& h, const DiscreteRV& x); // signed allowed

// Same with a raw evaluator; h_at_one is needed for signed inputs.
double rho_fn(const std::function<double(double)>& h, const LatticeRV& x);
double rho_fn(const std::function<double(double)>& h, double h_at_one,
              const DiscreteRV& x);

// rho with an inf-convolution curve in place of h.
double rho_curve(const InfConvCurve& w, const LatticeRV& x);
double rho_curve(const InfConvCurve& w, const DiscreteRV& x);

// Left quantile-style value at risk (alpha = 0 gives the essential sup) and
// expected shortfall at level alpha.
double var_at(double alpha, const LatticeRV& x);
double var_at(double alpha, const DiscreteRV& x);
double es_at(double alpha, const LatticeRV& x);
double es_at(double alpha, const DiscreteRV& x);

// Pairwise dependence predicates over components on a common space.
bool is_comonotonic(const std::vector<LatticeRV>& components);
bool is_counter_monotonic(const std::vector<LatticeRV>& components);

// One dyadic layer of X: the level k/2^n and the atoms on which X reaches it.
struct LayerEvent {
    double level;
    std::vector<char> mask;
    double prob;
};

// Dyadic layer decomposition of X at resolution 2^-n; the rebuilt variable
// sum_k 2^-n 1{mask_k} underestimates X by at most 2^-n.
std::vector<LayerEvent> layer_decompose(const LatticeRV& x, int n);

// Uniform N-atom lattice approximating d by largest-remainder rounding;
// *max_snap (optional) receives the largest probability adjustment.
LatticeRV lattice_from_discrete(const DiscreteRV& d, int atoms,
                                double* max_snap = nullptr);

} // namespace riskshare
