#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qest/qest.hpp"

namespace qest {

using json = nlohmann::json;

/// Shortest decimal text with 9 significant digits.
inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

/// Rounds to 9 significant digits so JSON output matches the CSV text.
inline double round9(double x) { return std::stod(format_number(x)); }

template <std::size_t N>
json to_json(const SymMat<N>& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < N; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < N; ++j) row.push_back(round9(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const ThetaParams& t) {
    return json::array({round9(t.theta1()), round9(t.theta2()), round9(t.theta3())});
}

inline json to_json(const Vec3& v) { return json::array({round9(v[0]), round9(v[1]), round9(v[2])}); }

/// [{label, matrix: [[re, im] x 4]}] in row-major order.
inline json to_json(const Povm& povm) {
    json out = json::array();
    for (const auto& e : povm.elements()) {
        const CMat2 m = e.matrix().dense();
        json entries = json::array();
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                entries.push_back(json::array({round9(m(i, j).real()), round9(m(i, j).imag())}));
        out.push_back({{"label", e.label}, {"matrix", entries}});
    }
    return out;
}

inline json to_json(const OptimalPovmPlan& plan) {
    return {{"directions", json::array({to_json(plan.directions[0]), to_json(plan.directions[1])})},
            {"probabilities", json::array({round9(plan.probabilities[0]), round9(plan.probabilities[1])})},
            {"lambdas", json::array({round9(plan.lambdas[0]), round9(plan.lambdas[1])})},
            {"degenerate", plan.degenerate}};
}

inline json to_json(const BoundReport& r) {
    return {{"sld_cr", round9(r.sld_cr)},
            {"rld_cr", round9(r.rld_cr)},
            {"nagaoka_hgm", round9(r.nagaoka_hgm)},
            {"holevo", round9(r.holevo)},
            {"k", r.k}};
}

inline json to_json(const RegionVerdict& v) {
    json margins = json::object();
    for (const auto& m : v.margins) margins[m.name] = round9(m.slack);
    return {{"member", v.member}, {"boundary", v.boundary}, {"margins", margins}};
}

inline json to_json(const SimResult& r) {
    json out = {{"strategy", to_string(r.strategy)},
                {"n", r.n},
                {"trials", r.trials},
                {"empirical_mse", to_json(r.empirical_mse)},
                {"weighted_mse", round9(r.weighted_mse)},
                {"n_weighted_mse", round9(r.n_times_weighted_mse)},
                {"stderr", round9(r.stderr)},
                {"flagged_trials", r.flagged_trials}};
    out["gamma"] = r.gamma ? json(round9(*r.gamma)) : json(nullptr);
    out["n_phase_mse"] = r.n_times_phase_mse ? json(round9(*r.n_times_phase_mse)) : json(nullptr);
    if (r.phase_copies > 0) out["phase_copies"] = r.phase_copies;
    if (r.phase_mse_times_m) out["phase_mse_times_m"] = round9(*r.phase_mse_times_m);
    if (!r.warnings.empty()) out["warnings"] = r.warnings;
    return out;
}

inline std::string simulate_csv_header() { return "n,n_weighted_mse,stderr,gamma,strategy"; }

inline std::string simulate_csv_row(const SimResult& r) {
    std::ostringstream os;
    os << r.n << ',' << format_number(r.n_times_weighted_mse) << ',' << format_number(r.stderr) << ','
       << (r.gamma ? format_number(*r.gamma) : std::string()) << ',' << to_string(r.strategy);
    return os.str();
}

} // namespace qest
