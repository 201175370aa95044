#include "riskshare/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace riskshare {

namespace {

constexpr int kMaxAtoms = 16;

enum class Mode { Full, Comonotone, Counter };

struct AtomClass {
    double prob;
    double value;
    std::vector<int> atoms;
};

std::vector<AtomClass> build_classes(const LatticeRV& x) {
    std::vector<AtomClass> classes;
    for (int k = 0; k < x.atoms(); ++k) {
        double p = x.probs()[k];
        double v = x.values()[k];
        bool zero = v <= 0.0;
        auto it = std::find_if(classes.begin(), classes.end(), [&](const AtomClass& c) {
            if (zero) return c.value <= 0.0; // all zero-value atoms collapse
            return c.prob == p && c.value == v;
        });
        if (it == classes.end())
            classes.push_back({p, zero ? 0.0 : v, {k}});
        else
            it->atoms.push_back(k);
    }
    return classes;
}

void gen_compositions(int remaining, int parts_left, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
    if (parts_left == 1) {
        cur.push_back(remaining);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int c = 0; c <= remaining; ++c) {
        cur.push_back(c);
        gen_compositions(remaining - c, parts_left - 1, cur, out);
        cur.pop_back();
    }
}

// integer compositions of `levels` into n parts, lexicographic order
std::vector<std::vector<int>> compositions(int levels, int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    gen_compositions(levels, n, cur, out);
    return out;
}

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > kSaturated / b) return kSaturated;
    return a * b;
}

// C(top, pick) with saturation
std::uint64_t sat_binomial(std::uint64_t top, std::uint64_t pick) {
    if (pick > top) return 0;
    pick = std::min(pick, top - pick);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= pick; ++i) {
        // result *= (top - pick + i) / i, kept exact by factor ordering
        std::uint64_t num = top - pick + i;
        std::uint64_t gcd_ri = std::gcd(result, i);
        std::uint64_t r2 = result / gcd_ri;
        std::uint64_t i2 = i / gcd_ri;
        std::uint64_t num2 = num / i2; // i2 divides num after reduction
        if (num % i2 != 0) {
            // fall back: multiply then divide (may saturate)
            std::uint64_t prod = sat_mul(result, num);
            if (prod == kSaturated) return kSaturated;
            result = prod / i;
            continue;
        }
        result = sat_mul(r2, num2);
        if (result == kSaturated) return kSaturated;
    }
    return result;
}

std::uint64_t count_candidates(const std::vector<AtomClass>& classes, int comp_count,
                               Mode mode) {
    std::uint64_t total = 1;
    for (const auto& c : classes) {
        std::uint64_t per_class;
        std::uint64_t comps = c.value <= 0.0 ? 1 : static_cast<std::uint64_t>(comp_count);
        std::uint64_t m = c.atoms.size();
        if (mode == Mode::Comonotone)
            per_class = comps; // constant composition within a class
        else
            per_class = sat_binomial(comps + m - 1, m);
        total = sat_mul(total, per_class);
        if (total == kSaturated) return kSaturated;
    }
    return total;
}

struct RunOutput {
    double value = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> parts;
    std::uint64_t candidates = 0;
};

class Enumerator {
  public:
    Enumerator(const std::vector<DistortionFn>& hs, const LatticeRV& x, int levels,
               Mode mode)
        : x_(x), mode_(mode), n_(static_cast<int>(hs.size())),
          atom_count_(x.atoms()) {
        if (atom_count_ > kMaxAtoms)
            throw DomainError("oracle: lattice exceeds " +
                              std::to_string(kMaxAtoms) + " atoms");
        classes_ = build_classes(x);
        comps_int_ = compositions(levels, n_);
        // share tables per class: comps x agents
        for (const auto& c : classes_) {
            std::vector<std::vector<double>> shares;
            if (c.value <= 0.0) {
                shares.emplace_back(n_, 0.0);
            } else {
                shares.reserve(comps_int_.size());
                for (const auto& comp : comps_int_) {
                    std::vector<double> row(n_);
                    for (int a = 0; a < n_; ++a)
                        row[a] = c.value * static_cast<double>(comp[a]) /
                                 static_cast<double>(levels);
                    shares.push_back(std::move(row));
                }
            }
            class_shares_.push_back(std::move(shares));
        }
        // mask tables: probability of each atom subset and h of it per agent
        const std::size_t masks = std::size_t{1} << atom_count_;
        std::vector<double> mask_prob(masks, 0.0);
        for (std::size_t m = 1; m < masks; ++m) {
            int low = std::countr_zero(m);
            mask_prob[m] = mask_prob[m & (m - 1)] + x.probs()[low];
        }
        tab_.assign(n_, std::vector<double>(masks));
        for (int a = 0; a < n_; ++a)
            for (std::size_t m = 0; m < masks; ++m)
                tab_[a][m] = hs[a](std::clamp(mask_prob[m], 0.0, 1.0));
        cur_.assign(n_, std::vector<double>(atom_count_, 0.0));
    }

    RunOutput run() {
        out_ = RunOutput{};
        recurse(0);
        return std::move(out_);
    }

  private:
    void recurse(std::size_t class_idx) {
        if (class_idx == classes_.size()) {
            evaluate();
            return;
        }
        const auto& cls = classes_[class_idx];
        const auto& shares = class_shares_[class_idx];
        if (mode_ == Mode::Comonotone) {
            for (const auto& row : shares) {
                for (int atom : cls.atoms)
                    for (int a = 0; a < n_; ++a) cur_[a][atom] = row[a];
                recurse(class_idx + 1);
            }
            return;
        }
        assign_slot(class_idx, 0, 0);
    }

    // nondecreasing composition indices across the slots of one class
    void assign_slot(std::size_t class_idx, std::size_t slot, std::size_t min_comp) {
        const auto& cls = classes_[class_idx];
        if (slot == cls.atoms.size()) {
            recurse(class_idx + 1);
            return;
        }
        const auto& shares = class_shares_[class_idx];
        int atom = cls.atoms[slot];
        for (std::size_t ci = min_comp; ci < shares.size(); ++ci) {
            for (int a = 0; a < n_; ++a) cur_[a][atom] = shares[ci][a];
            assign_slot(class_idx, slot + 1, ci);
        }
    }

    bool dependence_ok() const {
        const double tol = 1e-12;
        for (int i = 0; i < atom_count_; ++i) {
            if (x_.probs()[i] <= 0.0) continue;
            for (int j = i + 1; j < atom_count_; ++j) {
                if (x_.probs()[j] <= 0.0) continue;
                for (int a = 0; a < n_; ++a) {
                    double da = cur_[a][i] - cur_[a][j];
                    for (int b = a + 1; b < n_; ++b) {
                        double cross = da * (cur_[b][i] - cur_[b][j]);
                        if (mode_ == Mode::Comonotone && cross < -tol) return false;
                        if (mode_ == Mode::Counter && cross > tol) return false;
                    }
                }
            }
        }
        return true;
    }

    double parts_value() const {
        double total = 0.0;
        int idx[kMaxAtoms];
        for (int a = 0; a < n_; ++a) {
            const auto& row = cur_[a];
            for (int k = 0; k < atom_count_; ++k) idx[k] = k;
            // insertion sort, descending by share
            for (int k = 1; k < atom_count_; ++k) {
                int key = idx[k];
                int j = k - 1;
                while (j >= 0 && row[idx[j]] < row[key]) {
                    idx[j + 1] = idx[j];
                    --j;
                }
                idx[j + 1] = key;
            }
            std::size_t mask = 0;
            double r = 0.0;
            for (int k = 0; k < atom_count_; ++k) {
                mask |= std::size_t{1} << idx[k];
                double lo = k + 1 < atom_count_ ? row[idx[k + 1]] : 0.0;
                double dy = row[idx[k]] - lo;
                if (dy > 0.0) r += dy * tab_[a][mask];
            }
            total += r;
        }
        return total;
    }

    void evaluate() {
        ++out_.candidates;
        if (mode_ != Mode::Full && !dependence_ok()) return;
        double v = parts_value();
        if (v < out_.value) {
            out_.value = v;
            out_.parts = cur_;
        }
    }

    const LatticeRV& x_;
    Mode mode_;
    int n_;
    int atom_count_;
    std::vector<AtomClass> classes_;
    std::vector<std::vector<int>> comps_int_;
    std::vector<std::vector<std::vector<double>>> class_shares_;
    std::vector<std::vector<double>> tab_;
    std::vector<std::vector<double>> cur_;
    RunOutput out_;
};

std::uint64_t count_for(const OracleProblem& p, int levels, Mode mode) {
    auto classes = build_classes(p.x);
    auto comps = sat_binomial(
        static_cast<std::uint64_t>(levels) + p.hs.size() - 1, p.hs.size() - 1);
    if (comps == kSaturated) return kSaturated;
    return count_candidates(classes, static_cast<int>(comps), mode);
}

void validate_problem(const OracleProblem& p) {
    if (p.hs.empty()) throw DomainError("oracle: no agents");
    if (!p.x.nonnegative()) throw DomainError("oracle: risk must be nonnegative");
    if (p.levels < 1 || p.levels > 64)
        throw DomainError("oracle: levels must lie in [1, 64]");
}

RunOutput run_mode(const OracleProblem& p, int levels, Mode mode) {
    Enumerator e(p.hs, p.x, levels, mode);
    return e.run();
}

OracleResult solve(const OracleProblem& p, Mode mode) {
    validate_problem(p);
    std::uint64_t count = count_for(p, p.levels, mode);
    if (count > p.budget) {
        std::ostringstream os;
        os << "oracle: enumeration needs " << count << " candidates, budget is "
           << p.budget;
        throw BudgetError(os.str(), count);
    }

    RunOutput primary = run_mode(p, p.levels, mode);
    OracleResult res;
    res.value = primary.value;
    res.candidates = primary.candidates;
    Allocation argmin{p.x, std::move(primary.parts)};
    argmin.validate(true);
    res.argmin = std::move(argmin);

    std::ostringstream cert;
    double delta = 0.0;
    if (count_for(p, 2 * p.levels, mode) <= p.budget) {
        RunOutput fine = run_mode(p, 2 * p.levels, mode);
        double gain = std::max(0.0, res.value - fine.value);
        delta += gain;
        cert << "L " << p.levels << " -> " << 2 * p.levels << " change "
             << gain;
    } else if (p.levels % 2 == 0) {
        RunOutput coarse = run_mode(p, p.levels / 2, mode);
        double gain = std::max(0.0, coarse.value - res.value);
        delta += gain;
        cert << "coarse comparison L " << p.levels / 2 << " -> " << p.levels
             << " change " << gain;
    } else {
        cert << "no refinement fits the budget";
    }
    if (p.x.atoms() * 2 <= kMaxAtoms) {
        OracleProblem split{p.hs, p.x.split_atoms(), p.levels, p.budget};
        if (count_for(split, p.levels, mode) <= p.budget) {
            RunOutput fine = run_mode(split, p.levels, mode);
            double gain = std::max(0.0, res.value - fine.value);
            delta += gain;
            cert << "; atoms " << p.x.atoms() << " -> " << split.x.atoms()
                 << " change " << gain;
        }
    }
    res.delta = delta + 1e-9;
    res.certificate = cert.str();
    return res;
}

} // namespace

std::uint64_t oracle_candidate_count(const OracleProblem& p) {
    validate_problem(p);
    return count_for(p, p.levels, Mode::Full);
}

OracleResult brute_min(const OracleProblem& p) { return solve(p, Mode::Full); }

OracleResult enumerate_comonotone(const OracleProblem& p) {
    return solve(p, Mode::Comonotone);
}

OracleResult enumerate_counter(const OracleProblem& p) {
    return solve(p, Mode::Counter);
}

bool monotonicity_probe(const DistortionFn& h1, const DistortionFn& h2,
                        const LatticeRV& x_low, const LatticeRV& x_high,
                        int levels, std::uint64_t budget) {
    if (x_low.atoms() != x_high.atoms())
        throw DomainError("monotonicity_probe: lattices differ in size");
    for (int k = 0; k < x_low.atoms(); ++k) {
        if (std::abs(x_low.probs()[k] - x_high.probs()[k]) > 1e-12)
            throw DomainError("monotonicity_probe: probability spaces differ");
        if (x_low.values()[k] > x_high.values()[k] + 1e-12)
            throw DomainError("monotonicity_probe: x_low must be <= x_high");
    }
    OracleResult lo = brute_min({{h1, h2}, x_low, levels, budget});
    OracleResult hi = brute_min({{h1, h2}, x_high, levels, budget});
    return lo.value <= hi.value + std::max(lo.delta, hi.delta);
}

} // namespace riskshare
