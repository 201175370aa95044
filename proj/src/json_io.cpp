#include "riskshare/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace riskshare {

namespace {

using json = nlohmann::ordered_json;

json parse_or_throw(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed JSON: ") + e.what());
    }
}

double number_at(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        throw DomainError("malformed JSON: expected number field '" + key + "'");
    return j[key].get<double>();
}

std::string string_at(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_string())
        throw DomainError("malformed JSON: expected string field '" + key + "'");
    return j[key].get<std::string>();
}

const json& object_at(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_object())
        throw DomainError("malformed JSON: expected object field '" + key + "'");
    return j[key];
}

std::vector<std::pair<double, double>> pair_list_at(const json& j,
                                                    const std::string& key) {
    if (!j.contains(key) || !j[key].is_array())
        throw DomainError("malformed JSON: expected array field '" + key + "'");
    std::vector<std::pair<double, double>> out;
    for (const auto& entry : j[key]) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number())
            throw DomainError("malformed JSON: '" + key +
                              "' entries must be [number, number] pairs");
        out.emplace_back(entry[0].get<double>(), entry[1].get<double>());
    }
    return out;
}

std::vector<double> number_list_at(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_array())
        throw DomainError("malformed JSON: expected array field '" + key + "'");
    std::vector<double> out;
    for (const auto& entry : j[key]) {
        if (!entry.is_number())
            throw DomainError("malformed JSON: '" + key + "' entries must be numbers");
        out.push_back(entry.get<double>());
    }
    return out;
}

json distortion_json(const DistortionFn& h) {
    json j;
    const auto& node = h.node();
    if (const auto* p = std::get_if<detail::PowerNode>(&node)) {
        j["family"] = "power";
        j["params"] = {{"beta", p->beta}};
    } else if (const auto* d = std::get_if<detail::DualPowerNode>(&node)) {
        j["family"] = "dual_power";
        j["params"] = {{"alpha", d->alpha}};
    } else if (const auto* pl = std::get_if<detail::PiecewiseLinearNode>(&node)) {
        json knots = json::array();
        for (const auto& [x, y] : pl->knots) knots.push_back({x, y});
        j["family"] = "pwl";
        j["params"] = {{"knots", knots}};
    } else if (const auto* v = std::get_if<detail::VaRNode>(&node)) {
        j["family"] = "var";
        j["params"] = {{"alpha", v->alpha}, {"closed", v->closed}};
    } else if (std::holds_alternative<detail::IdentityNode>(node)) {
        j["family"] = "identity";
        j["params"] = json::object();
    } else if (const auto* t = std::get_if<detail::TabulatedNode>(&node)) {
        j["family"] = "tabulated";
        j["params"] = {{"values", t->values}};
    } else {
        // Composed nodes (shift, dual, active part) have no named family;
        // serialize grid samples.
        std::vector<double> values(kDefaultGrid);
        for (int i = 0; i < kDefaultGrid; ++i)
            values[i] = h(grid_point(i, kDefaultGrid));
        j["family"] = "tabulated";
        j["params"] = {{"values", values}};
    }
    return j;
}

DistortionFn distortion_from(const json& j) {
    if (!j.is_object())
        throw DomainError("malformed JSON: distortion must be an object");
    const std::string family = string_at(j, "family");
    const json params = j.contains("params") ? j["params"] : json::object();
    if (!params.is_object())
        throw DomainError("malformed JSON: 'params' must be an object");
    if (family == "power") return DistortionFn::power(number_at(params, "beta"));
    if (family == "dual_power")
        return DistortionFn::dual_power(number_at(params, "alpha"));
    if (family == "pwl")
        return DistortionFn::piecewise_linear(pair_list_at(params, "knots"));
    if (family == "var") {
        bool closed = false;
        if (params.contains("closed")) {
            if (!params["closed"].is_boolean())
                throw DomainError("malformed JSON: 'closed' must be a boolean");
            closed = params["closed"].get<bool>();
        }
        return DistortionFn::var_indicator(number_at(params, "alpha"), closed);
    }
    if (family == "identity") return DistortionFn::identity();
    if (family == "tabulated")
        return DistortionFn::tabulated(number_list_at(params, "values"));
    throw DomainError("unknown distortion family: " + family);
}

struct RiskSpec {
    std::string type;
    double p = 0.0;
    double a = 1.0;
    std::vector<std::pair<double, double>> support;
    std::vector<double> values;
    std::vector<double> probs; // empty = uniform
};

RiskSpec risk_spec_from(const json& j) {
    if (!j.is_object())
        throw DomainError("malformed JSON: risk must be an object");
    RiskSpec spec;
    spec.type = string_at(j, "type");
    if (spec.type == "bernoulli") {
        spec.p = number_at(j, "p");
        spec.a = j.contains("a") ? number_at(j, "a") : 1.0;
        if (spec.p < 0.0 || spec.p > 1.0)
            throw DomainError("bernoulli risk: p must lie in [0,1]");
    } else if (spec.type == "discrete") {
        spec.support = pair_list_at(j, "support");
        if (spec.support.empty())
            throw DomainError("discrete risk: support must be nonempty");
    } else if (spec.type == "lattice") {
        spec.values = number_list_at(j, "values");
        if (spec.values.empty())
            throw DomainError("lattice risk: values must be nonempty");
        if (j.contains("probs")) spec.probs = number_list_at(j, "probs");
    } else {
        throw DomainError("unknown risk type: " + spec.type);
    }
    return spec;
}

LatticeRV lattice_from_spec(const RiskSpec& spec) {
    if (spec.type == "bernoulli") {
        if (spec.p <= 0.0) return LatticeRV::uniform({0.0});
        if (spec.p >= 1.0) return LatticeRV::uniform({spec.a});
        return LatticeRV::weighted({0.0, spec.a}, {1.0 - spec.p, spec.p});
    }
    if (spec.type == "discrete") {
        std::vector<double> values;
        std::vector<double> probs;
        for (const auto& [v, p] : spec.support) {
            values.push_back(v);
            probs.push_back(p);
        }
        return LatticeRV::weighted(std::move(values), std::move(probs));
    }
    if (spec.probs.empty()) return LatticeRV::uniform(spec.values);
    return LatticeRV::weighted(spec.values, spec.probs);
}

DiscreteRV discrete_from_spec(const RiskSpec& spec) {
    if (spec.type == "bernoulli") return DiscreteRV::bernoulli(spec.p, spec.a);
    if (spec.type == "discrete") return DiscreteRV::from_support(spec.support);
    // Aggregate lattice atoms with equal values into one support point.
    std::map<double, double> agg;
    const double u = spec.probs.empty()
                         ? 1.0 / static_cast<double>(spec.values.size())
                         : 0.0;
    for (std::size_t k = 0; k < spec.values.size(); ++k)
        agg[spec.values[k]] += spec.probs.empty() ? u : spec.probs[k];
    return DiscreteRV::from_support({agg.begin(), agg.end()});
}

json finite_or_tag(double v) {
    if (std::isfinite(v)) return json(v);
    return json("neg_inf");
}

json solution_json(const SharingSolution& sol, const std::string& csv_path) {
    json j;
    j["value"] = sol.neg_infinity ? json("neg_inf") : finite_or_tag(sol.value);
    j["method"] = to_string(sol.method);
    j["exact"] = sol.exact;
    j["bounds"] = {finite_or_tag(sol.lower_bound), finite_or_tag(sol.upper_bound)};
    if (!sol.neg_infinity) j["benchmark"] = sol.benchmark;
    if (sol.witness_prob) j["witness_prob"] = *sol.witness_prob;
    if (sol.dyadic_gap > 0.0) j["dyadic_gap"] = sol.dyadic_gap;
    if (!sol.note.empty()) j["note"] = sol.note;
    if (!csv_path.empty()) j["allocation_csv"] = csv_path;
    return j;
}

} // namespace

std::string distortion_to_json(const DistortionFn& h) {
    return distortion_json(h).dump(2) + "\n";
}

DistortionFn distortion_from_json(const std::string& text) {
    return distortion_from(parse_or_throw(text));
}

LatticeRV risk_lattice_from_json(const std::string& text) {
    return lattice_from_spec(risk_spec_from(parse_or_throw(text)));
}

DiscreteRV risk_discrete_from_json(const std::string& text) {
    return discrete_from_spec(risk_spec_from(parse_or_throw(text)));
}

Economy economy_from_json(const std::string& text, int grid_size) {
    const json j = parse_or_throw(text);
    if (!j.is_object() || !j.contains("agents") || !j["agents"].is_array() ||
        j["agents"].empty())
        throw DomainError("malformed JSON: economy needs a nonempty 'agents' array");
    Economy eco{{}, lattice_from_spec(risk_spec_from(object_at(j, "risk")))};
    int index = 0;
    for (const auto& entry : j["agents"]) {
        ++index;
        if (!entry.is_object())
            throw DomainError("malformed JSON: each agent must be an object");
        EconomyAgent agent{entry.contains("id") ? string_at(entry, "id")
                                                : "agent" + std::to_string(index),
                           distortion_from(object_at(entry, "h")), Attitude::Other};
        if (entry.contains("attitude")) {
            const std::string a = string_at(entry, "attitude");
            if (a == "averse") agent.attitude = Attitude::Averse;
            else if (a == "seeking") agent.attitude = Attitude::Seeking;
            else throw DomainError("unknown attitude: " + a);
        } else {
            agent.attitude = classify_agent(agent.h, grid_size);
        }
        eco.agents.push_back(std::move(agent));
    }
    return eco;
}

std::string solution_to_json(const SharingSolution& sol,
                             const std::string& allocation_csv_path) {
    return solution_json(sol, allocation_csv_path).dump(2) + "\n";
}

std::string economy_result_to_json(const Economy& eco, const SharingSolution& sol,
                                   const std::string& allocation_csv_path) {
    json j = solution_json(sol, allocation_csv_path);
    json per_agent = json::array();
    for (std::size_t i = 0; i < eco.agents.size(); ++i) {
        json row;
        row["id"] = eco.agents[i].id;
        if (sol.allocation && i < sol.allocation->parts.size()) {
            // Clamp the fp dust that expansion can leave on a zero part.
            std::vector<double> part = sol.allocation->parts[i];
            for (double& v : part) v = std::max(v, 0.0);
            row["rho"] = rho(eco.agents[i].h,
                             LatticeRV::weighted(part, sol.allocation->total.probs()));
            row["allocation_csv_column"] = "x" + std::to_string(i + 1);
        } else {
            row["rho"] = nullptr;
        }
        per_agent.push_back(std::move(row));
    }
    j["per_agent"] = std::move(per_agent);
    return j.dump(2) + "\n";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string curve_csv(const InfConvCurve& curve) {
    std::string out = "x,value";
    for (int i = 1; i <= curve.components(); ++i)
        out += ",y" + std::to_string(i);
    out += "\n";
    const int g = curve.grid_size();
    for (int i = 0; i < g; ++i) {
        const double x = grid_point(i, g);
        out += format_double(x) + "," + format_double(curve.value_at(x));
        for (double y : curve.split_at(x)) out += "," + format_double(y);
        out += "\n";
    }
    return out;
}

std::string allocation_csv(const Allocation& a) {
    std::string out = "atom,u_low,u_high,total";
    for (int i = 1; i <= a.agents(); ++i) out += ",x" + std::to_string(i);
    out += "\n";
    for (int k = 0; k < a.total.atoms(); ++k) {
        out += std::to_string(k) + "," + format_double(a.total.u_low(k)) + "," +
               format_double(a.total.u_high(k)) + "," +
               format_double(a.total.values()[k]);
        for (const auto& part : a.parts) out += "," + format_double(part[k]);
        out += "\n";
    }
    return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const auto temp = path.string() + ".tmp";
    {
        std::ofstream f(temp, std::ios::binary | std::ios::trunc);
        if (!f) throw DomainError("cannot open for writing: " + temp);
        f << content;
        if (!f.flush()) throw DomainError("write failed: " + temp);
    }
    std::filesystem::rename(temp, path);
}

} // namespace riskshare
