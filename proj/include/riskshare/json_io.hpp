#pragma once

#include <filesystem>
#include <string>

#include "riskshare/multi.hpp"
#include "riskshare/sharing.hpp"

namespace riskshare {

// {"family": "power"|"dual_power"|"pwl"|"var"|"identity"|"tabulated",
//  "params": {...}}; composed internal nodes serialize as tabulated samples.
std::string distortion_to_json(const DistortionFn& h);
DistortionFn distortion_from_json(const std::string& text);

// {"type":"bernoulli","p":..,"a":..} | {"type":"discrete","support":[[v,p],..]}
// | {"type":"lattice","values":[..],"probs":[..]?} (uniform when probs absent)
LatticeRV risk_lattice_from_json(const std::string& text);
DiscreteRV risk_discrete_from_json(const std::string& text);

// {"agents":[{"id":..,"h":{..},"attitude":"averse"|"seeking"?},..],
//  "risk":{..}}; attitude inferred from shape when absent.
Economy economy_from_json(const std::string& text, int grid_size = kDefaultGrid);

// {"value": number|"neg_inf", "method": tag, "exact": bool,
//  "bounds": [lo,hi], "benchmark", "note", "allocation_csv"?, ...}
std::string solution_to_json(const SharingSolution& sol,
                             const std::string& allocation_csv_path = "");
// Same, plus "per_agent":[{"id","rho","allocation_csv_column"},...].
std::string economy_result_to_json(const Economy& eco, const SharingSolution& sol,
                                   const std::string& allocation_csv_path = "");

// Header `x,value,y1,...,yn`, one row per grid point.
std::string curve_csv(const InfConvCurve& curve);
// Header `atom,u_low,u_high,total,x1,...,xn`, one row per atom.
std::string allocation_csv(const Allocation& a);

// Fixed 17-significant-digit formatting used by every CSV emitter, so
// identical inputs produce byte-identical files.
std::string format_double(double v);

// Write via a temp file in the target directory plus rename.
void atomic_write(const std::filesystem::path& path, const std::string& content);

} // namespace riskshare
