// Python bindings for the core operations: distortion algebra, rho, merged
// curves, the pair and n-agent solvers, and the exhaustive oracle. Risks are
// passed as (values, probs) arrays; solver results come back as dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>
#include <vector>

#include "riskshare/multi.hpp"
#include "riskshare/oracle.hpp"
#include "riskshare/sharing.hpp"

namespace py = pybind11;
using namespace riskshare;

namespace {

LatticeRV make_lattice(const std::vector<double>& values,
                       const std::optional<std::vector<double>>& probs) {
    if (probs) return LatticeRV::weighted(values, *probs);
    return LatticeRV::uniform(values);
}

py::object parts_or_none(const std::optional<Allocation>& a) {
    if (!a) return py::none();
    return py::cast(a->parts);
}

py::dict solution_dict(const SharingSolution& sol) {
    py::dict d;
    d["value"] = sol.value;
    d["neg_infinity"] = sol.neg_infinity;
    d["method"] = to_string(sol.method);
    d["exact"] = sol.exact;
    d["lower_bound"] = sol.lower_bound;
    d["upper_bound"] = sol.upper_bound;
    d["benchmark"] = sol.benchmark;
    d["note"] = sol.note;
    d["allocation"] = parts_or_none(sol.allocation);
    if (sol.witness_prob) d["witness_prob"] = *sol.witness_prob;
    return d;
}

py::dict oracle_dict(const OracleResult& res) {
    py::dict d;
    d["value"] = res.value;
    d["delta"] = res.delta;
    d["candidates"] = res.candidates;
    d["certificate"] = res.certificate;
    d["allocation"] = parts_or_none(res.argmin);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Distortion risk measures, optimal risk sharing, and brute-force "
              "verification oracles";

    py::class_<DistortionFn>(m, "DistortionFn")
        .def("__call__", [](const DistortionFn& h, double t) { return eval(h, t); },
             py::arg("t"))
        .def("at_one", &DistortionFn::at_one)
        .def("is_var", &DistortionFn::is_var)
        .def("describe", &DistortionFn::describe)
        .def("__repr__", [](const DistortionFn& h) {
            return "DistortionFn(" + h.describe() + ")";
        });

    m.def("power", &DistortionFn::power, py::arg("beta"));
    m.def("dual_power", &DistortionFn::dual_power, py::arg("alpha"));
    m.def("expected_shortfall", &DistortionFn::expected_shortfall, py::arg("b"));
    m.def("flat_then_linear", &DistortionFn::flat_then_linear, py::arg("a"));
    m.def("var_indicator", &DistortionFn::var_indicator, py::arg("alpha"),
          py::arg("closed") = false);
    m.def("identity", &DistortionFn::identity);
    m.def("piecewise_linear", &DistortionFn::piecewise_linear, py::arg("knots"));
    m.def("tabulated", &DistortionFn::tabulated, py::arg("values"));

    m.def("dual", &dual, py::arg("h"));
    m.def("shift", &shift, py::arg("h"), py::arg("a"));
    m.def("is_concave", &is_concave, py::arg("h"), py::arg("grid_size") = kDefaultGrid);
    m.def("is_convex", &is_convex, py::arg("h"), py::arg("grid_size") = kDefaultGrid);
    m.def("dominates", &dominates, py::arg("h1"), py::arg("h2"),
          py::arg("grid_size") = kDefaultGrid);
    m.def("check_existence", &check_existence, py::arg("h1"), py::arg("h2"),
          py::arg("grid_size") = kDefaultGrid);
    m.def("min_of", &min_of, py::arg("hs"), py::arg("grid_size") = kDefaultGrid);
    m.def("power_family_split", &power_family_split, py::arg("alpha"),
          py::arg("beta"), py::arg("x"));

    m.def(
        "rho",
        [](const DistortionFn& h, const std::vector<double>& values,
           const std::optional<std::vector<double>>& probs) {
            return rho(h, make_lattice(values, probs));
        },
        py::arg("h"), py::arg("values"), py::arg("probs") = py::none(),
        "Distorted expectation of the risk given by atom values and "
        "probabilities (uniform when probs is omitted).");

    py::class_<InfConvCurve>(m, "InfConvCurve")
        .def("value_at", &InfConvCurve::value_at, py::arg("x"))
        .def("split_at", &InfConvCurve::split_at, py::arg("x"))
        .def("at_one", &InfConvCurve::at_one)
        .def("exact", &InfConvCurve::exact)
        .def("selector_monotone", &InfConvCurve::selector_monotone)
        .def("components", &InfConvCurve::components)
        .def("as_distortion", &InfConvCurve::as_distortion);

    m.def(
        "infconv_fn",
        [](const std::vector<DistortionFn>& hs, int grid_size) {
            return infconv_fn(hs, grid_size);
        },
        py::arg("hs"), py::arg("grid_size") = kDefaultGrid,
        "Function-level infimal convolution of the given distortions.");

    m.def(
        "solve_lplus",
        [](const DistortionFn& h1, const DistortionFn& h2,
           const std::vector<double>& values,
           const std::optional<std::vector<double>>& probs, int grid_size) {
            SolveOptions opts;
            opts.grid_size = grid_size;
            return solution_dict(solve_lplus(h1, h2, make_lattice(values, probs), opts));
        },
        py::arg("h1"), py::arg("h2"), py::arg("values"),
        py::arg("probs") = py::none(), py::arg("grid_size") = kDefaultGrid,
        "Optimal two-agent sharing over nonnegative positions dominated by "
        "the risk.");

    m.def(
        "solve_linf",
        [](const DistortionFn& h1, const DistortionFn& h2,
           const std::vector<std::pair<double, double>>& support, int grid_size) {
            SolveOptions opts;
            opts.grid_size = grid_size;
            return solution_dict(
                solve_linf(h1, h2, DiscreteRV::from_support(support), opts));
        },
        py::arg("h1"), py::arg("h2"), py::arg("support"),
        py::arg("grid_size") = kDefaultGrid,
        "Optimal two-agent sharing over unconstrained bounded positions; the "
        "risk is given by (value, probability) pairs.");

    m.def(
        "solve_n",
        [](const std::vector<DistortionFn>& hs, const std::vector<double>& values,
           const std::optional<std::vector<double>>& probs, int grid_size) {
            SolveOptions opts;
            opts.grid_size = grid_size;
            const Economy eco = make_economy(hs, make_lattice(values, probs), grid_size);
            return solution_dict(solve_n(eco, opts));
        },
        py::arg("hs"), py::arg("values"), py::arg("probs") = py::none(),
        py::arg("grid_size") = kDefaultGrid,
        "n-agent sharing: reduce to two representatives, solve, re-expand.");

    m.def(
        "pwl_n_agent",
        [](const std::vector<double>& b_list, const std::vector<double>& a_list,
           const std::vector<double>& values,
           const std::optional<std::vector<double>>& probs) {
            return solution_dict(
                pwl_n_agent(b_list, a_list, make_lattice(values, probs)));
        },
        py::arg("b_list"), py::arg("a_list"), py::arg("values"),
        py::arg("probs") = py::none(),
        "Closed form for shortfall agents (levels b_list) plus flat agents "
        "(widths a_list).");

    m.def(
        "brute_min",
        [](const std::vector<DistortionFn>& hs, const std::vector<double>& values,
           const std::optional<std::vector<double>>& probs, int levels,
           std::uint64_t budget) {
            return oracle_dict(
                brute_min({hs, make_lattice(values, probs), levels, budget}));
        },
        py::arg("hs"), py::arg("values"), py::arg("probs") = py::none(),
        py::arg("levels") = 10, py::arg("budget") = kDefaultOracleBudget,
        "Exhaustive minimum over per-atom gridded allocations.");

    m.attr("DEFAULT_GRID") = kDefaultGrid;

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<BudgetError>(m, "BudgetError", PyExc_RuntimeError);
}
