// Command-line front end: config ingestion, computation dispatch, and CSV/JSON
// emission, including one-command replication of the library's reference
// datasets. Exit codes: 0 success, 2 domain/config errors, 3 budget errors.
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "riskshare/json_io.hpp"
#include "riskshare/multi.hpp"
#include "riskshare/oracle.hpp"
#include "riskshare/sharing.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace riskshare;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    int grid = kDefaultGrid;
    int lattice = 0; // >0: project a distribution-form risk onto N atoms
    int dyadic = 10;
    int oracle_levels = 10;
    double tolerance = kTol;
};

void add_common(CLI::App* sub, CommonOpts& opts, bool needs_config) {
    auto* cfg = sub->add_option("--config", opts.config_path,
                                "Path to the JSON problem description");
    if (needs_config) cfg->required();
    sub->add_option("--out", opts.out_dir, "Output directory for artifacts");
    sub->add_option("--grid", opts.grid, "Evaluation grid size on [0,1]");
    sub->add_option("--lattice", opts.lattice,
                    "Project distribution risks onto this many equal-probability atoms");
    sub->add_option("--dyadic", opts.dyadic, "Layered-construction resolution n (2^-n)");
    sub->add_option("--oracle-levels", opts.oracle_levels,
                    "Oracle grid levels per atom");
    sub->add_option("--tolerance", opts.tolerance, "Exactness tolerance");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json parse_config(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed JSON: ") + e.what());
    }
}

std::uint64_t budget_from_env() {
    const char* raw = std::getenv("RISKSHARE_BUDGET");
    if (raw == nullptr || *raw == '\0') return kDefaultOracleBudget;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (end == raw || *end != '\0' || v == 0ULL)
        throw DomainError("RISKSHARE_BUDGET must be a positive integer");
    return static_cast<std::uint64_t>(v);
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    return (std::filesystem::path(opts.out_dir) / name).string();
}

void emit(const CommonOpts& opts, const std::string& name, const std::string& body) {
    atomic_write(out_path(opts, name), body);
}

const json& require_field(const json& j, const std::string& key) {
    if (!j.is_object() || !j.contains(key))
        throw DomainError("config needs a '" + key + "' field");
    return j[key];
}

DistortionFn fn_field(const json& j, const std::string& key) {
    return distortion_from_json(require_field(j, key).dump());
}

// Risk as an explicit finite space; --lattice N projects distribution forms.
LatticeRV risk_as_lattice(const json& config, const CommonOpts& opts) {
    const json& risk = require_field(config, "risk");
    if (opts.lattice > 0 && risk.is_object() && risk.contains("type") &&
        risk["type"] != "lattice") {
        return lattice_from_discrete(risk_discrete_from_json(risk.dump()),
                                     opts.lattice);
    }
    return risk_lattice_from_json(risk.dump());
}

SolveOptions solve_opts(const CommonOpts& opts) {
    return SolveOptions{opts.grid, opts.dyadic, opts.tolerance};
}

bool is_economy(const json& config) {
    return config.is_object() && config.contains("agents");
}

int run_value(const json& config, const CommonOpts& opts, bool with_allocation) {
    std::string result;
    std::string csv;
    if (is_economy(config)) {
        Economy eco = economy_from_json(config.dump(), opts.grid);
        if (opts.lattice > 0)
            throw DomainError("--lattice does not apply to economy risks");
        SharingSolution sol = solve_n(eco, solve_opts(opts));
        std::string csv_name;
        if (with_allocation && sol.allocation) {
            csv_name = "allocation.csv";
            csv = allocation_csv(*sol.allocation);
        }
        result = economy_result_to_json(eco, sol, csv_name);
        if (!csv.empty()) emit(opts, csv_name, csv);
    } else {
        DistortionFn h1 = fn_field(config, "h1");
        DistortionFn h2 = fn_field(config, "h2");
        const std::string space =
            config.contains("space") ? config["space"].get<std::string>() : "lplus";
        SharingSolution sol;
        if (space == "linf") {
            sol = solve_linf(h1, h2,
                             risk_discrete_from_json(require_field(config, "risk").dump()),
                             solve_opts(opts));
        } else if (space == "lplus") {
            const json& risk = require_field(config, "risk");
            const bool explicit_space =
                with_allocation || opts.lattice > 0 ||
                (risk.is_object() && risk.contains("type") && risk["type"] == "lattice");
            if (explicit_space)
                sol = solve_lplus(h1, h2, risk_as_lattice(config, opts), solve_opts(opts));
            else
                sol = solve_lplus(h1, h2, risk_discrete_from_json(risk.dump()),
                                  solve_opts(opts));
        } else {
            throw DomainError("unknown space: " + space + " (use lplus or linf)");
        }
        std::string csv_name;
        if (with_allocation && sol.allocation) {
            csv_name = "allocation.csv";
            csv = allocation_csv(*sol.allocation);
        }
        result = solution_to_json(sol, csv_name);
        if (!csv.empty()) emit(opts, csv_name, csv);
    }
    emit(opts, "result.json", result);
    std::cout << result;
    return 0;
}

int run_infconv_fn(const json& config, const CommonOpts& opts) {
    std::vector<DistortionFn> fns;
    if (config.contains("hs")) {
        if (!config["hs"].is_array() || config["hs"].empty())
            throw DomainError("'hs' must be a nonempty array of distortions");
        for (const auto& entry : config["hs"])
            fns.push_back(distortion_from_json(entry.dump()));
    } else {
        fns.push_back(fn_field(config, "h1"));
        fns.push_back(fn_field(config, "h2"));
    }
    InfConvCurve curve = infconv_fn(fns, opts.grid);
    emit(opts, "curve.csv", curve_csv(curve));
    json j;
    j["at_one"] = curve.at_one();
    j["exact"] = curve.exact();
    j["selector_monotone"] = curve.selector_monotone();
    j["components"] = curve.components();
    j["curve_csv"] = "curve.csv";
    const std::string result = j.dump(2) + "\n";
    emit(opts, "result.json", result);
    std::cout << result;
    return 0;
}

int run_check_existence(const json& config, const CommonOpts& opts) {
    const bool exists = check_existence(fn_field(config, "h1"),
                                        fn_field(config, "h2"), opts.grid);
    json j;
    j["exists"] = exists;
    const std::string result = j.dump(2) + "\n";
    emit(opts, "result.json", result);
    std::cout << result;
    return 0;
}

int run_reduce(const json& config, const CommonOpts& opts) {
    Economy eco = economy_from_json(config.dump(), opts.grid);
    Reduction red = reduce(eco, opts.grid);
    json j;
    j["averse"] = json::array();
    for (int i : red.averse) j["averse"].push_back(eco.agents[i].id);
    j["seeking"] = json::array();
    for (int i : red.seeking) j["seeking"].push_back(eco.agents[i].id);
    j["averse_rep"] =
        red.averse_rep ? json::parse(distortion_to_json(*red.averse_rep)) : json();
    j["seeking_rep"] =
        red.seeking_rep ? json::parse(distortion_to_json(*red.seeking_rep)) : json();
    j["seeking_scale"] = red.seeking_scale;
    j["seeking_exact"] = red.seeking_exact;
    const std::string result = j.dump(2) + "\n";
    emit(opts, "result.json", result);
    std::cout << result;
    return 0;
}

int run_oracle(const json& config, const CommonOpts& opts) {
    OracleProblem problem{{}, risk_as_lattice(config, opts), opts.oracle_levels,
                          budget_from_env()};
    if (config.contains("hs")) {
        for (const auto& entry : config["hs"])
            problem.hs.push_back(distortion_from_json(entry.dump()));
    } else {
        problem.hs.push_back(fn_field(config, "h1"));
        problem.hs.push_back(fn_field(config, "h2"));
    }
    const std::string mode =
        config.contains("mode") ? config["mode"].get<std::string>() : "full";
    OracleResult res;
    if (mode == "full") res = brute_min(problem);
    else if (mode == "comonotone") res = enumerate_comonotone(problem);
    else if (mode == "counter") res = enumerate_counter(problem);
    else throw DomainError("unknown oracle mode: " + mode);
    std::string csv_name;
    if (res.argmin) {
        csv_name = "oracle_allocation.csv";
        emit(opts, csv_name, allocation_csv(*res.argmin));
    }
    json j;
    j["value"] = res.value;
    j["delta"] = res.delta;
    j["candidates"] = res.candidates;
    j["certificate"] = res.certificate;
    if (!csv_name.empty()) j["allocation_csv"] = csv_name;
    const std::string result = j.dump(2) + "\n";
    emit(opts, "result.json", result);
    std::cout << result;
    return 0;
}

// ---------------------------------------------------------------------------
// replicate: reference datasets with PASS/FAIL checks against pinned values.

struct CaseReport {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string row;
    for (const auto& c : cells) {
        if (!row.empty()) row += ",";
        row += c;
    }
    return row + "\n";
}

// Mixed-shape distortion whose rho is subadditive but not superadditive on
// all of [0,1]: splitting an overlap of two events strictly helps the pool.
bool replicate_subadditive(const CommonOpts& opts) {
    auto h = [](double t) { return std::max(std::sqrt(t), 2.0 * t - t * t); };
    DiscreteRV part = DiscreteRV::bernoulli(0.38);
    // 1_A + 1_B with P(A)=P(B)=0.38 and P(A and B)=0.26.
    DiscreteRV total = DiscreteRV::from_support({{0.0, 0.50}, {1.0, 0.24}, {2.0, 0.26}});
    const double split_sum = 2.0 * rho_fn(h, 1.0, part);
    const double pooled = rho_fn(h, 1.0, total);
    const double pooled_exact = 0.75 + std::sqrt(0.26);

    CaseReport r;
    r.check(std::abs(split_sum - 1.233) <= 1e-3, "split sum vs 1.233");
    r.check(std::abs(pooled - 1.260) <= 1e-3, "pooled vs 1.260");
    r.check(std::abs(pooled - pooled_exact) <= 1e-9, "pooled vs closed form");
    r.check(split_sum < pooled, "strict inequality");

    std::string csv = csv_row({"quantity", "computed", "reference", "tolerance"});
    csv += csv_row({"rho_split_sum", format_double(split_sum), "1.233", "1e-3"});
    csv += csv_row({"rho_pooled", format_double(pooled), "1.260", "1e-3"});
    csv += csv_row({"rho_pooled_exact", format_double(pooled),
                    format_double(pooled_exact), "1e-9"});
    emit(opts, "ex-subadditive.csv", csv);

    std::cout << (r.pass ? "[PASS]" : "[FAIL]") << " ex-subadditive  split_sum="
              << format_double(split_sum) << " pooled=" << format_double(pooled)
              << (r.detail.empty() ? "" : "  (" + r.detail + ")") << "\n";
    return r.pass;
}

// Flat-then-linear (a=1/4) against expected shortfall (b=7/8): the merged
// curve is max{0,(x-a)/b} and the flat agent's share of x is min(x, a).
bool replicate_pwl_figure(const CommonOpts& opts) {
    const double a = 0.25, b = 0.875;
    InfConvCurve curve = infconv_fn(
        {DistortionFn::flat_then_linear(a), DistortionFn::expected_shortfall(b)},
        opts.grid);

    CaseReport r;
    double worst_value = 0.0, worst_split = 0.0;
    for (int i = 0; i < opts.grid; ++i) {
        const double x = grid_point(i, opts.grid);
        const double want = std::max(0.0, (x - a) / b);
        worst_value = std::max(worst_value, std::abs(curve.value_at(x) - want));
        worst_split =
            std::max(worst_split, std::abs(curve.split_at(x)[0] - std::min(x, a)));
    }
    r.check(worst_value <= 1e-12, "curve vs closed form");
    r.check(worst_split <= 1e-12, "selector vs min(x, a)");
    r.check(curve.exact(), "exact knot path");

    emit(opts, "ex-pwl-figure.csv", curve_csv(curve));
    std::cout << (r.pass ? "[PASS]" : "[FAIL]") << " ex-pwl-figure  max|dw|="
              << format_double(worst_value) << " max|dy|=" << format_double(worst_split)
              << (r.detail.empty() ? "" : "  (" + r.detail + ")") << "\n";
    return r.pass;
}

// First-agent share y*(x) for the DualPower(2)/Power(3) pair: zero up to
// p0 = sqrt(2/3), then the root of 2(1-y) = 3(x-y)^2, which has the closed
// form (3x - 1 - sqrt(7-6x))/3.
bool replicate_power_figure(const CommonOpts& opts) {
    const double alpha = 2.0, beta = 3.0;
    const double p0 = std::sqrt(2.0 / 3.0);
    auto closed = [](double x) {
        return (3.0 * x - 1.0 - std::sqrt(7.0 - 6.0 * x)) / 3.0;
    };

    CaseReport r;
    double worst = 0.0;
    double prev_y = 0.0, prev_rest = 1.0;
    for (int i = 1; i <= 50; ++i) {
        const double x = p0 + (1.0 - p0) * static_cast<double>(i) / 50.0;
        const auto [y, rest] = power_family_split(alpha, beta, x);
        worst = std::max(worst, std::abs(y - closed(x)));
        r.check(y >= prev_y - 1e-12, "y* nondecreasing");
        r.check(rest <= prev_rest + 1e-12, "x - y* nonincreasing");
        prev_y = y;
        prev_rest = rest;
    }
    r.check(worst <= 1e-9, "y* vs closed form");

    // The switch point solves alpha = beta * x^(beta-1): bisect it blind and
    // compare against the analytic p0.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (alpha - beta * std::pow(mid, beta - 1.0) > 0.0 ? lo : hi) = mid;
    }
    r.check(std::abs(0.5 * (lo + hi) - p0) <= 1e-9, "p0 switch location");
    r.check(power_family_split(alpha, beta, p0 * 0.999).first == 0.0,
            "zero share below p0");
    r.check(power_family_split(alpha, beta, std::min(1.0, p0 * 1.001)).first > 0.0,
            "positive share above p0");

    std::string csv = csv_row({"x", "y_star", "second_share", "closed_form"});
    for (int i = 0; i <= 50; ++i) {
        const double x = static_cast<double>(i) / 50.0;
        const auto [y, rest] = power_family_split(alpha, beta, x);
        csv += csv_row({format_double(x), format_double(y), format_double(rest),
                        format_double(x > p0 ? closed(x) : 0.0)});
    }
    emit(opts, "ex-power-figure.csv", csv);

    std::cout << (r.pass ? "[PASS]" : "[FAIL]") << " ex-power-figure  max|dy*|="
              << format_double(worst)
              << (r.detail.empty() ? "" : "  (" + r.detail + ")") << "\n";
    return r.pass;
}

// Two-atom space (1/6, 5/6), agents min{2x,1} and max{0,3x-2}, total risk 1:
// the constrained minimum 5/6 sits strictly above the curve value 2/3.
bool replicate_finite_space(const CommonOpts& opts) {
    DistortionFn h1 = DistortionFn::expected_shortfall(0.5);
    DistortionFn h2 = DistortionFn::flat_then_linear(2.0 / 3.0);
    LatticeRV one = LatticeRV::weighted({1.0, 1.0}, {1.0 / 6.0, 5.0 / 6.0});

    OracleResult res = brute_min({{h1, h2}, one, opts.oracle_levels, budget_from_env()});
    const double curve_value = rho_curve(infconv_fn({h1, h2}, opts.grid), one);

    CaseReport r;
    r.check(std::abs(res.value - 5.0 / 6.0) <= 1e-12, "constrained value vs 5/6");
    r.check(std::abs(curve_value - 2.0 / 3.0) <= 1e-12, "curve value vs 2/3");
    r.check(res.value > curve_value + 0.1, "strict gap");

    std::string csv = csv_row({"quantity", "computed", "reference", "tolerance"});
    csv += csv_row({"constrained_min", format_double(res.value),
                    format_double(5.0 / 6.0), "1e-12"});
    csv += csv_row({"curve_value", format_double(curve_value),
                    format_double(2.0 / 3.0), "1e-12"});
    emit(opts, "ex-finite-space.csv", csv);

    std::cout << (r.pass ? "[PASS]" : "[FAIL]") << " ex-finite-space  constrained="
              << format_double(res.value) << " curve=" << format_double(curve_value)
              << (r.detail.empty() ? "" : "  (" + r.detail + ")") << "\n";
    return r.pass;
}

// Two VaR agents with alpha sum >= 1: no finite optimum over unconstrained
// positions; the solver reports the witness probability of the losing bet.
bool replicate_var(const CommonOpts& opts) {
    DistortionFn h1 = DistortionFn::var_indicator(0.6);
    DistortionFn h2 = DistortionFn::var_indicator(0.5);
    const bool exists = check_existence(h1, h2, opts.grid);
    SharingSolution sol = solve_linf(h1, h2, DiscreteRV::constant(1.0),
                                     solve_opts(opts));

    CaseReport r;
    r.check(!exists, "existence should fail");
    r.check(sol.neg_infinity, "value should be neg_inf");
    r.check(sol.witness_prob.has_value(), "witness probability reported");

    std::string csv = csv_row({"quantity", "computed", "reference"});
    csv += csv_row({"exists", exists ? "1" : "0", "0"});
    csv += csv_row({"value", sol.neg_infinity ? "neg_inf" : format_double(sol.value),
                    "neg_inf"});
    csv += csv_row({"witness_prob",
                    sol.witness_prob ? format_double(*sol.witness_prob) : "none", ""});
    emit(opts, "ex-var.csv", csv);

    std::cout << (r.pass ? "[PASS]" : "[FAIL]") << " ex-var  exists="
              << (exists ? "true" : "false") << " value="
              << (sol.neg_infinity ? "neg_inf" : format_double(sol.value))
              << (r.detail.empty() ? "" : "  (" + r.detail + ")") << "\n";
    return r.pass;
}

int run_replicate(const std::string& which, const CommonOpts& opts) {
    struct Case {
        std::string name;
        bool (*fn)(const CommonOpts&);
    };
    const std::vector<Case> cases = {
        {"ex-subadditive", replicate_subadditive},
        {"ex-pwl-figure", replicate_pwl_figure},
        {"ex-power-figure", replicate_power_figure},
        {"ex-finite-space", replicate_finite_space},
        {"ex-var", replicate_var},
    };
    int failures = 0;
    bool matched = false;
    for (const auto& c : cases) {
        if (which != "all" && which != c.name) continue;
        matched = true;
        if (!c.fn(opts)) ++failures;
    }
    if (!matched) throw DomainError("unknown replicate case: " + which);
    return failures;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distortion risk sharing toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string replicate_case = "all";

    CLI::App* cmd_value = app.add_subcommand("value", "Optimal total risk value");
    add_common(cmd_value, opts, true);
    CLI::App* cmd_allocate =
        app.add_subcommand("allocate", "Optimal value plus an explicit allocation");
    add_common(cmd_allocate, opts, true);
    CLI::App* cmd_infconv =
        app.add_subcommand("infconv-fn", "Function-level inf-convolution curve");
    add_common(cmd_infconv, opts, true);
    CLI::App* cmd_exist =
        app.add_subcommand("check-existence", "Finite-optimum criterion for a pair");
    add_common(cmd_exist, opts, true);
    CLI::App* cmd_reduce =
        app.add_subcommand("reduce", "Two-representative reduction of an economy");
    add_common(cmd_reduce, opts, true);
    CLI::App* cmd_oracle =
        app.add_subcommand("oracle", "Exhaustive discretized minimization");
    add_common(cmd_oracle, opts, true);
    CLI::App* cmd_replicate =
        app.add_subcommand("replicate", "Reference datasets with PASS/FAIL checks");
    add_common(cmd_replicate, opts, false);
    cmd_replicate->add_option("case", replicate_case,
                              "Case name (default: all)");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(cmd_replicate)) return run_replicate(replicate_case, opts);
        const json config = parse_config(opts.config_path);
        if (app.got_subcommand(cmd_value)) return run_value(config, opts, false);
        if (app.got_subcommand(cmd_allocate)) return run_value(config, opts, true);
        if (app.got_subcommand(cmd_infconv)) return run_infconv_fn(config, opts);
        if (app.got_subcommand(cmd_exist)) return run_check_existence(config, opts);
        if (app.got_subcommand(cmd_reduce)) return run_reduce(config, opts);
        if (app.got_subcommand(cmd_oracle)) return run_oracle(config, opts);
        throw DomainError("unknown subcommand");
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
