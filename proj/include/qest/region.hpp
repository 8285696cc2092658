#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qest/bounds.hpp"
#include "qest/errors.hpp"
#include "qest/fisher.hpp"
#include "qest/kernels.hpp"
#include "qest/matrix.hpp"
#include "qest/model.hpp"

namespace qest {

inline constexpr double region_tolerance = 1e-10;

/// One named slack value. Strict conditions need slack > 1e-10, the others
/// slack >= -1e-10.
struct Margin {
    std::string name;
    double slack = 0.0;
    bool strict = false;

    [[nodiscard]] bool satisfied() const {
        return strict ? slack > region_tolerance : slack >= -region_tolerance;
    }
    [[nodiscard]] bool on_boundary() const {
        return !strict && std::abs(slack) <= region_tolerance;
    }
};

struct RegionVerdict {
    bool member = false;
    /// Some non-strict condition holds with equality (within 1e-10).
    bool boundary = false;
    std::vector<Margin> margins;

    [[nodiscard]] double margin(const std::string& name) const {
        for (const auto& m : margins)
            if (m.name == name) return m.slack;
        fail(ErrorCode::invalid_argument, "no margin named '" + name + "'");
    }
};

namespace detail {

inline RegionVerdict verdict(std::vector<Margin> margins) {
    RegionVerdict v;
    v.member = true;
    for (const auto& m : margins) {
        if (!m.satisfied()) v.member = false;
        if (m.on_boundary()) v.boundary = true;
    }
    if (!v.member) v.boundary = false;
    v.margins = std::move(margins);
    return v;
}

} // namespace detail

/// D: V - G^{-1} > 0 and det(V - G^{-1}) >= det G^{-1}.
inline RegionVerdict in_region_D(const Sym2& v, const ThetaParams& t) {
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    const Sym2 diff = v - ginv;
    return detail::verdict({{"eigen_slack", min_eigenvalue(diff), true},
                            {"det_slack", determinant(diff) - determinant(ginv), false}});
}

/// D_GM: V - G^{-1} > 0 and Tr(G^{-1} V^{-1}) <= 1.
inline RegionVerdict in_region_D_GM(const Sym2& v, const ThetaParams& t) {
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    const double eig = min_eigenvalue(v - ginv);
    if (!(min_eigenvalue(v) > 0.0)) {
        return detail::verdict({{"eigen_slack", eig, true}, {"trace_slack", -1.0, false}});
    }
    const Sym2 vinv = inverse(v);
    // det(V - A) - det A = det V (1 - Tr(V^{-1} A)): rescale so slacks share a sign
    const double slack = determinant(v) * (1.0 - trace_product(ginv, vinv));
    return detail::verdict({{"eigen_slack", eig, true}, {"trace_slack", slack, false}});
}

/// D_SLD(3): V_2 - G^{-1} >= 0 and v33 >= g33.
inline RegionVerdict in_region_SLD3(const Sym3& v, const ThetaParams& t) {
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    return detail::verdict({{"eigen_slack", min_eigenvalue(interest_block(v) - ginv), false},
                            {"phase_slack", v(2, 2) - phase_sld_variance(t), false}});
}

/// D(3): v33 > g33, and with gamma = v33 / (v33 - g33),
/// V_2 - gamma G^{-1} > 0 and det(V_2 - gamma G^{-1}) >= det(gamma G^{-1}).
inline RegionVerdict in_region_D3(const Sym3& v, const ThetaParams& t) {
    const double g33 = phase_sld_variance(t);
    const Margin phase{"phase_slack", v(2, 2) - g33, true};
    if (!phase.satisfied()) {
        return detail::verdict({phase, {"eigen_slack", -1.0, true}, {"det_slack", -1.0, false}});
    }
    const double gamma = gamma_factor(v(2, 2), g33);
    const Sym2 scaled = sld_fisher_inverse<2>(t) * gamma;
    const Sym2 diff = interest_block(v) - scaled;
    return detail::verdict({phase,
                            {"eigen_slack", min_eigenvalue(diff), true},
                            {"det_slack", determinant(diff) - determinant(scaled), false}});
}

/// Holevo region for the known-phase model: V >= G^{-1}.
inline RegionVerdict in_region_H(const Sym2& v, const ThetaParams& t) {
    return detail::verdict(
        {{"eigen_slack", min_eigenvalue(v - sld_fisher_inverse<2>(t)), false}});
}

/// gamma G^{-1} - (gamma - 1) Re G~^{-1}.
inline Sym2 holevo_threshold(const ThetaParams& t, double gamma) {
    return sld_fisher_inverse<2>(t) * gamma -
           rld_fisher_inverse<2>(t).real_part() * (gamma - 1.0);
}

/// Holevo region with the phase as nuisance: v33 > g33, V_2 > G^{-1},
/// V_2 >= gamma G^{-1} - (gamma - 1) G~^{-1}.
inline RegionVerdict in_region_H(const Sym3& v, const ThetaParams& t) {
    const double g33 = phase_sld_variance(t);
    const Margin phase{"phase_slack", v(2, 2) - g33, true};
    const Sym2 v2 = interest_block(v);
    const Margin sld{"eigen_slack", min_eigenvalue(v2 - sld_fisher_inverse<2>(t)), true};
    if (!phase.satisfied()) {
        return detail::verdict({phase, sld, {"holevo_slack", -1.0, false}});
    }
    const double gamma = gamma_factor(v(2, 2), g33);
    return detail::verdict(
        {phase, sld, {"holevo_slack", min_eigenvalue(v2 - holevo_threshold(t, gamma)), false}});
}

struct TraceDetReport {
    bool d2_member = false;
    /// Number of sampled X with Tr(XV) < 2 c sqrt(det X).
    int violations = 0;
    int samples = 0;
    /// Most negative Tr(XV) - 2 c sqrt(det X) seen.
    double worst_slack = 0.0;
    /// D2 members never violate; non-members violate at least once.
    bool consistent = false;
};

/**
 * Compares {V > 0, det V >= c^2} with {Tr(XV) >= 2 c sqrt(det X) for all X > 0}
 * by sampling X = B^T B + 1e-6 I, B uniform in [-1, 1]. Sample 0 is
 * X = V^{-1} (or u u^T + 1e-6 I along the smallest eigenvector of V when V
 * is not positive definite).
 */
inline TraceDetReport trace_det_equivalence_check(double c, const Sym2& v, int trials,
                                             std::uint64_t seed) {
    if (!(c > 0.0) || trials < 1) {
        fail(ErrorCode::invalid_argument, "trace-det check needs c > 0 and trials >= 1");
    }
    TraceDetReport r;
    const auto eig = sym_eig(v);
    const bool pd = eig.values[1] > 0.0;
    r.d2_member = pd && determinant(v) >= c * c - region_tolerance;
    r.samples = trials;
    r.worst_slack = std::numeric_limits<double>::infinity();

    auto check = [&](const Sym2& x) {
        const double slack = trace_product(x, v) - 2.0 * c * std::sqrt(std::max(determinant(x), 0.0));
        r.worst_slack = std::min(r.worst_slack, slack);
        if (slack < -region_tolerance) ++r.violations;
    };

    if (pd) {
        check(inverse(v));
    } else {
        Sym2 x = Sym2::identity() * 1e-6;
        const double u0 = eig.vectors(0, 1);
        const double u1 = eig.vectors(1, 1);
        x(0, 0) += u0 * u0;
        x(0, 1) += u0 * u1;
        x(1, 1) += u1 * u1;
        check(x);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int s = 1; s < trials; ++s) {
        Matrix<2> b{{unif(rng), unif(rng)}, {unif(rng), unif(rng)}};
        check(Sym2::symmetrize(b.transpose() * b) + Sym2::identity() * 1e-6);
    }
    r.consistent = r.d2_member ? r.violations == 0 : r.violations > 0;
    return r;
}

} // namespace qest
