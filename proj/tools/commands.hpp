#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qest/qest.hpp"
#include "serialize.hpp"

namespace qest::cli {

enum class Output { json, csv };

/// Numbers from a weight or candidate-matrix source: "identity", an inline
/// comma-separated row-major list, or a CSV file with one matrix row per line.
struct MatrixSource {
    bool identity = false;
    std::vector<double> values;
    std::size_t rows = 0;
};

inline double parse_field(const std::string& field, const std::string& where) {
    std::size_t b = 0;
    std::size_t e = field.size();
    while (b < e && std::isspace(static_cast<unsigned char>(field[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(field[e - 1]))) --e;
    const std::string trimmed = field.substr(b, e - b);
    char* end = nullptr;
    const double v = std::strtod(trimmed.c_str(), &end);
    if (trimmed.empty() || end != trimmed.c_str() + trimmed.size() || !std::isfinite(v)) {
        fail(ErrorCode::invalid_argument, where + ": '" + trimmed + "' is not a finite number");
    }
    return v;
}

inline std::vector<double> split_numbers(const std::string& line, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string field;
    std::size_t idx = 0;
    while (std::getline(ss, field, ',')) {
        ++idx;
        out.push_back(parse_field(field, where + ", field " + std::to_string(idx)));
    }
    return out;
}

inline MatrixSource read_matrix_source(const std::string& spec) {
    MatrixSource src;
    if (spec == "identity") {
        src.identity = true;
        return src;
    }
    std::ifstream file(spec);
    if (file) {
        std::string line;
        std::size_t lineno = 0;
        std::size_t width = 0;
        while (std::getline(file, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto row = split_numbers(line, spec + " line " + std::to_string(lineno));
            if (width == 0) width = row.size();
            if (row.size() != width) {
                fail(ErrorCode::invalid_argument, spec + " line " + std::to_string(lineno) + ": expected " +
                                                      std::to_string(width) + " fields, found " +
                                                      std::to_string(row.size()));
            }
            src.values.insert(src.values.end(), row.begin(), row.end());
            ++src.rows;
        }
        if (src.rows == 0 || src.rows != width) {
            fail(ErrorCode::invalid_argument, spec + ": expected a square matrix with one row per line");
        }
        return src;
    }
    src.values = split_numbers(spec, "matrix");
    const auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(src.values.size()))));
    if (k * k != src.values.size()) {
        fail(ErrorCode::invalid_argument,
             "matrix: expected 4 or 9 comma-separated values, found " + std::to_string(src.values.size()));
    }
    src.rows = k;
    return src;
}

template <std::size_t N>
SymMat<N> to_sym(const MatrixSource& src, const std::string& what) {
    if (src.identity) return SymMat<N>::identity();
    if (src.rows != N) {
        fail(ErrorCode::invalid_argument, what + " must be " + std::to_string(N) + "x" + std::to_string(N));
    }
    Matrix<N> m;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m(i, j) = src.values[i * N + j];
    try {
        return SymMat<N>::from_dense(m);
    } catch (const Error&) {
        fail(ErrorCode::invalid_argument, what + " must be symmetric");
    }
}

struct CommonOptions {
    std::string theta = "0.5,0.5,1.0";
    std::string weight = "identity";
    double w3 = 1.0;
    std::string nuisance = "known";
    std::string output = "json";
};

inline Output parse_output(const std::string& s) {
    if (s == "json") return Output::json;
    if (s == "csv") return Output::csv;
    fail(ErrorCode::invalid_argument, "output must be json or csv");
}

inline bool nuisance_unknown(const std::string& s) {
    if (s == "known") return false;
    if (s == "unknown") return true;
    fail(ErrorCode::invalid_argument, "nuisance must be known or unknown");
}

/// Weight for the nuisance model: a 2x2 source plus w3 gives the block form,
/// a 3x3 source is used as a full matrix.
inline Weight3 weight3(const MatrixSource& src, double w3) {
    if (!src.identity && src.rows == 3) return Weight3(to_sym<3>(src, "weight"));
    if (!(w3 > 0.0) || !std::isfinite(w3)) fail(ErrorCode::invalid_argument, "w3 must be positive");
    return Weight3(BlockWeight{to_sym<2>(src, "weight"), w3});
}

inline json weight_json(const MatrixSource& src, bool unknown, double w3) {
    if (unknown) return to_json(weight3(src, w3).full());
    return to_json(to_sym<2>(src, "weight"));
}

inline BoundReport compute_bounds(const ThetaParams& t, const MatrixSource& w, bool unknown, double w3) {
    if (unknown) return bound_report(t, weight3(w, w3));
    return bound_report(t, to_sym<2>(w, "weight"));
}

inline std::string bounds_csv_header() { return "sld_cr,rld_cr,nagaoka_hgm,holevo,k"; }

inline std::string bounds_csv_row(const BoundReport& r) {
    return format_number(r.sld_cr) + "," + format_number(r.rld_cr) + "," + format_number(r.nagaoka_hgm) +
           "," + format_number(r.holevo) + "," + std::to_string(r.k);
}

inline std::string cmd_bounds(const CommonOptions& o) {
    const ThetaParams t = ThetaParams::parse(o.theta);
    const MatrixSource w = read_matrix_source(o.weight);
    const bool unknown = nuisance_unknown(o.nuisance);
    const BoundReport r = compute_bounds(t, w, unknown, o.w3);
    if (parse_output(o.output) == Output::csv) return bounds_csv_header() + "\n" + bounds_csv_row(r) + "\n";
    json j = to_json(r);
    j["theta"] = to_json(t);
    j["weight"] = weight_json(w, unknown, o.w3);
    return j.dump(2) + "\n";
}

inline std::string cmd_povm(const CommonOptions& o) {
    if (nuisance_unknown(o.nuisance)) {
        fail(ErrorCode::invalid_argument, "the optimal POVM is built for the known-phase model only");
    }
    const ThetaParams t = ThetaParams::parse(o.theta);
    const Sym2 w = to_sym<2>(read_matrix_source(o.weight), "weight");
    const OptimalPovm opt = build_optimal_povm(t, w);
    const QuantumEstimator est = build_optimal_estimator(t, w, opt.povm);
    if (parse_output(o.output) == Output::csv) {
        std::string out = "label,theta1_hat,theta2_hat\n";
        for (const auto& e : opt.povm.elements()) {
            const auto& v = est.estimates.at(e.label);
            out += e.label + "," + format_number(v[0]) + "," + format_number(v[1]) + "\n";
        }
        return out;
    }
    json estimator = json::array();
    for (const auto& e : opt.povm.elements()) {
        const auto& v = est.estimates.at(e.label);
        estimator.push_back({{"label", e.label}, {"estimate", json::array({round9(v[0]), round9(v[1])})}});
    }
    json j = {{"theta", to_json(t)}, {"povm", to_json(opt.povm)}, {"plan", to_json(opt.plan)},
              {"estimator", estimator}};
    return j.dump(2) + "\n";
}

struct RegionOptions {
    std::string theta = "0.5,0.5,1.0";
    std::string v;
    std::string set;
    std::string output = "json";
};

inline std::string cmd_region(const RegionOptions& o) {
    const ThetaParams t = ThetaParams::parse(o.theta);
    const MatrixSource src = read_matrix_source(o.v);
    if (src.identity) fail(ErrorCode::invalid_argument, "candidate V must be given explicitly");
    RegionVerdict v;
    std::string set = o.set;
    if (src.rows == 2) {
        const Sym2 m = to_sym<2>(src, "candidate V");
        if (set.empty()) set = "D";
        if (set == "D") v = in_region_D(m, t);
        else if (set == "D_GM") v = in_region_D_GM(m, t);
        else if (set == "H") v = in_region_H(m, t);
        else fail(ErrorCode::invalid_argument, "set '" + set + "' needs a 3x3 candidate (2x2 sets: D, D_GM, H)");
    } else {
        const Sym3 m = to_sym<3>(src, "candidate V");
        if (set.empty()) set = "D3";
        if (set == "D3") v = in_region_D3(m, t);
        else if (set == "SLD3") v = in_region_SLD3(m, t);
        else if (set == "H") v = in_region_H(m, t);
        else fail(ErrorCode::invalid_argument, "set '" + set + "' needs a 2x2 candidate (3x3 sets: D3, SLD3, H)");
    }
    if (parse_output(o.output) == Output::csv) {
        std::string head = "set,member,boundary";
        std::string row = set + "," + (v.member ? "1" : "0") + "," + (v.boundary ? "1" : "0");
        for (const auto& m : v.margins) {
            head += "," + m.name;
            row += "," + format_number(m.slack);
        }
        return head + "\n" + row + "\n";
    }
    json j = to_json(v);
    j["set"] = set;
    return j.dump(2) + "\n";
}

struct SimulateOptions {
    std::string theta = "0.6,0,0.3";
    std::string weight = "identity";
    std::string strategy = "single-copy-optimal";
    std::string n = "1000";
    long long trials = 1000;
    std::uint64_t seed = 1;
    std::optional<double> phase_exponent;
    unsigned threads = 0;
    std::string output = "json";
};

/// QEST_SEED overrides the seed given on the command line.
inline std::uint64_t effective_seed(std::uint64_t flag) {
    if (const char* env = std::getenv("QEST_SEED"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') fail(ErrorCode::invalid_argument, "QEST_SEED must be an unsigned integer");
        return v;
    }
    return flag;
}

inline std::string cmd_simulate(const SimulateOptions& o) {
    SimConfig cfg;
    cfg.theta_true = ThetaParams::parse(o.theta);
    cfg.weight = to_sym<2>(read_matrix_source(o.weight), "weight");
    cfg.strategy = parse_strategy(o.strategy);
    cfg.trials = o.trials;
    cfg.seed = effective_seed(o.seed);
    cfg.phase_fraction_exponent = o.phase_exponent;
    cfg.threads = o.threads;
    std::vector<long long> ns;
    for (double v : split_numbers(o.n, "n")) {
        if (v != std::floor(v) || v < 1) fail(ErrorCode::invalid_argument, "n must be a positive integer");
        ns.push_back(static_cast<long long>(v));
    }
    std::vector<SimResult> results;
    for (long long n : ns) {
        cfg.n = n;
        results.push_back(run_simulation(cfg));
    }
    if (parse_output(o.output) == Output::csv) {
        std::string out = simulate_csv_header() + "\n";
        for (const auto& r : results) out += simulate_csv_row(r) + "\n";
        return out;
    }
    json arr = json::array();
    for (const auto& r : results) arr.push_back(to_json(r));
    json j = {{"theta", to_json(cfg.theta_true)}, {"seed", cfg.seed}, {"results", arr}};
    return j.dump(2) + "\n";
}

struct SweepOptions {
    CommonOptions common;
    std::string axis = "theta1";
    double min = 0.1;
    double max = 0.9;
    int steps = 81;
};

/// Grid rows; points with |theta1| < 1e-3 or outside the model are skipped and
/// reported through `notices`.
inline std::string cmd_sweep(const SweepOptions& o, std::vector<std::string>& notices) {
    const ThetaParams base = ThetaParams::parse(o.common.theta);
    const MatrixSource w = read_matrix_source(o.common.weight);
    const bool unknown = nuisance_unknown(o.common.nuisance);
    if (o.steps < 1) fail(ErrorCode::invalid_argument, "steps must be at least 1");
    if (!std::isfinite(o.min) || !std::isfinite(o.max)) fail(ErrorCode::invalid_argument, "sweep range must be finite");
    std::size_t axis = 0;
    if (o.axis == "theta1") axis = 0;
    else if (o.axis == "theta2") axis = 1;
    else if (o.axis == "theta3") axis = 2;
    else fail(ErrorCode::invalid_argument, "axis must be theta1, theta2 or theta3");
    const bool csv = parse_output(o.common.output) == Output::csv;

    std::string out = o.axis + "," + bounds_csv_header() + ",near_singular\n";
    json rows = json::array();
    for (int i = 0; i < o.steps; ++i) {
        const double x = o.steps == 1 ? o.min : o.min + (o.max - o.min) * i / (o.steps - 1);
        auto p = base.all();
        p[axis] = x;
        if (std::abs(p[0]) < 1e-3) {
            notices.push_back(o.axis + "=" + format_number(x) + " skipped: |theta1| < 1e-3 (g33 = 1/theta1^2 diverges)");
            continue;
        }
        if (p[0] * p[0] + p[1] * p[1] >= 1.0) {
            notices.push_back(o.axis + "=" + format_number(x) + " skipped: theta1^2 + theta2^2 >= 1");
            continue;
        }
        const BoundReport r = compute_bounds(ThetaParams(p[0], p[1], p[2]), w, unknown, o.common.w3);
        const bool near = std::abs(p[0]) < 1e-2;
        if (csv) {
            out += format_number(x) + "," + bounds_csv_row(r) + "," + (near ? "1" : "0") + "\n";
        } else {
            json row = to_json(r);
            row[o.axis] = round9(x);
            row["near_singular"] = near;
            rows.push_back(row);
        }
    }
    return csv ? out : rows.dump(2) + "\n";
}

} // namespace qest::cli
