#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qest/bounds.hpp"
#include "qest/errors.hpp"
#include "qest/fisher.hpp"
#include "qest/kernels.hpp"
#include "qest/matrix.hpp"
#include "qest/model.hpp"
#include "qest/povm.hpp"

namespace qest {

struct OptimalPovmPlan {
    std::array<Vec3, 2> directions{};
    std::array<double, 2> probabilities{};
    /// Eigenvalues of F = sqrt(G^{-1}) W sqrt(G^{-1}); arm i uses lambdas[i].
    std::array<double, 2> lambdas{};
    bool degenerate = false;
};

struct OptimalPovm {
    Povm povm;
    OptimalPovmPlan plan;
};

namespace detail {

/// E = [d_1 s, d_2 s], the 3x2 embedding of the interest tangent plane.
inline Vec3 embed(const ThetaParams& t, double a, double b) {
    const auto ds = bloch_derivatives<2>(t);
    return a * ds[0] + b * ds[1];
}

/// Outer product E m E^T of a symmetric 2x2 m.
inline Sym3 embed_outer(const ThetaParams& t, const Sym2& m) {
    const auto ds = bloch_derivatives<2>(t);
    Matrix<3, double> out;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = 0; b < 2; ++b) out(r, c) += ds[a][r] * m(a, b) * ds[b][c];
    return Sym3::symmetrize(out);
}

/// Unit vector of a rank-1 PSD 3x3 matrix; the sign makes the component
/// along d_1 s positive (or, failing that, the z component).
inline Vec3 rank_one_direction(const ThetaParams& t, const Sym3& p) {
    const auto eig = sym_eig(p);
    const double scale = std::max(std::abs(eig.values[0]), 1e-300);
    if (std::abs(eig.values[1]) > 1e-9 * std::max(1.0, scale) ||
        std::abs(eig.values[2]) > 1e-9 * std::max(1.0, scale)) {
        fail(ErrorCode::rank_deficient, "optimal projector is not rank one");
    }
    Vec3 n = eig.column3(0);
    const double along = dot(n, bloch_derivatives<2>(t)[0]);
    if (along < -1e-12 || (std::abs(along) <= 1e-12 && n[2] < 0.0)) n = -1.0 * n;
    return normalized(n);
}

} // namespace detail

/**
 * Optimal measurement for the known-phase model: arm i is the projective
 * pair along n_i = E u_i, where E (W - lambda_j G) E^T / (Tr W - lambda_j Tr G)
 * is the rank-one projector for the other eigenvalue lambda_j, mixed with
 * probability p_i = sqrt(lambda_i) / sum_j sqrt(lambda_j). Arms are ordered
 * by increasing lambda.
 *
 * For lambda_1 = lambda_2, or a normaliser below 1e-12, the directions come
 * from E sqrt(G) u_i with u_i the eigenvectors of F.
 */
inline OptimalPovm build_optimal_povm(const ThetaParams& t, const Sym2& w) {
    require_positive_definite(w);
    const Sym2 g = sld_fisher<2>(t).matrix;
    const SymEig<2> eig = sym_eig(weighted_information_matrix<2>(t, w));
    // sym_eig sorts descending; arm 0 takes the smaller eigenvalue
    const std::array<double, 2> lam{eig.values[1], eig.values[0]};
    const std::array<std::array<double, 2>, 2> u{
        std::array<double, 2>{eig.vectors(0, 1), eig.vectors(1, 1)},
        std::array<double, 2>{eig.vectors(0, 0), eig.vectors(1, 0)}};

    OptimalPovmPlan plan;
    plan.lambdas = lam;
    plan.degenerate = std::abs(lam[0] - lam[1]) <= 1e-12 * std::max(1.0, lam[1]);

    const Sym2 sqrt_g = psd_sqrt(g);
    for (std::size_t i = 0; i < 2; ++i) {
        const double other = lam[1 - i];
        const double normaliser = w.trace() - other * g.trace();
        Sym3 projector;
        if (!plan.degenerate && std::abs(normaliser) >= 1e-12) {
            projector = detail::embed_outer(t, (w - g * other) * (1.0 / normaliser));
        } else {
            const std::array<double, 2> v{sqrt_g(0, 0) * u[i][0] + sqrt_g(0, 1) * u[i][1],
                                          sqrt_g(1, 0) * u[i][0] + sqrt_g(1, 1) * u[i][1]};
            const Vec3 e = detail::embed(t, v[0], v[1]);
            Matrix<3, double> outer;
            for (std::size_t r = 0; r < 3; ++r)
                for (std::size_t c = 0; c < 3; ++c) outer(r, c) = e[r] * e[c];
            projector = Sym3::symmetrize(outer);
        }
        plan.directions[i] = detail::rank_one_direction(t, projector);
    }

    const double r0 = std::sqrt(std::max(lam[0], 0.0));
    const double r1 = std::sqrt(std::max(lam[1], 0.0));
    plan.probabilities = {r0 / (r0 + r1), r1 / (r0 + r1)};

    std::vector<PovmElement> elems;
    for (std::size_t i = 0; i < 2; ++i) {
        auto pair = Povm::projective_pair(plan.directions[i], std::to_string(i + 1),
                                          plan.probabilities[i]);
        elems.insert(elems.end(), pair.begin(), pair.end());
    }
    return {Povm(std::move(elems)), plan};
}

/// Right-hand side of the optimality condition: sqrt(G) sqrt(F) sqrt(G) / Tr sqrt(F).
inline Sym2 optimal_fisher_target(const ThetaParams& t, const Sym2& w) {
    const Sym2 sqrt_g = psd_sqrt(sld_fisher<2>(t).matrix);
    const Sym2 sqrt_f = psd_sqrt(weighted_information_matrix<2>(t, w));
    return Sym2::symmetrize(sqrt_g.dense() * sqrt_f.dense() * sqrt_g.dense()) *
           (1.0 / sqrt_f.trace());
}

/// Estimator table attached to a POVM, locally unbiased at `anchor`.
struct QuantumEstimator {
    Povm povm;
    std::map<std::string, std::array<double, 2>> estimates;
    ThetaParams anchor;
};

/// theta_hat(x) = theta + J^{-1} grad log p(x).
inline QuantumEstimator build_optimal_estimator(const ThetaParams& t, const Povm& povm) {
    const Sym2 j = classical_fisher<2>(t, povm).matrix;
    Sym2 jinv;
    try {
        jinv = inverse(j);
    } catch (const Error&) {
        fail(ErrorCode::rank_deficient, "classical Fisher matrix of the measurement is singular");
    }
    const BlochVector b = bloch_from_theta(t);
    const auto ds = bloch_derivatives<2>(t);
    QuantumEstimator est{povm, {}, t};
    for (const auto& e : povm.elements()) {
        const double p = e.op.expectation(b);
        std::array<double, 2> score{0.0, 0.0};
        if (p >= dead_outcome_probability) {
            score = {dot(ds[0], e.op.c) / p, dot(ds[1], e.op.c) / p};
        }
        est.estimates[e.label] = {t.theta1() + jinv(0, 0) * score[0] + jinv(0, 1) * score[1],
                                  t.theta2() + jinv(1, 0) * score[0] + jinv(1, 1) * score[1]};
    }
    return est;
}

inline QuantumEstimator build_optimal_estimator(const ThetaParams& t, const Sym2& w,
                                                const Povm& povm) {
    require_positive_definite(w);
    return build_optimal_estimator(t, povm);
}

struct UnbiasednessReport {
    double bias_residual = 0.0;
    double derivative_residual = 0.0;
    [[nodiscard]] bool pass(double tol = 1e-9) const {
        return bias_residual < tol && derivative_residual < tol;
    }
};

/// Residuals of sum_x theta_hat(x) p(x) = theta and sum_x theta_hat_i(x) d_j p(x) = delta_ij,
/// with d_j p from the matrix-form derivative of rho.
inline UnbiasednessReport verify_locally_unbiased(const QuantumEstimator& e) {
    const Herm2 rho = state_from_theta(e.anchor).matrix();
    const std::array<Herm2, 2> drho{density_derivative(e.anchor, 0), density_derivative(e.anchor, 1)};
    std::array<double, 2> mean{0.0, 0.0};
    std::array<std::array<double, 2>, 2> deriv{};
    for (const auto& el : e.povm.elements()) {
        const auto it = e.estimates.find(el.label);
        const std::array<double, 2> est = it == e.estimates.end() ? std::array<double, 2>{} : it->second;
        const CMat2 pi = el.matrix().dense();
        const double p = (rho.dense() * pi).trace().real();
        for (std::size_t i = 0; i < 2; ++i) {
            mean[i] += est[i] * p;
            for (std::size_t j = 0; j < 2; ++j)
                deriv[i][j] += est[i] * (drho[j].dense() * pi).trace().real();
        }
    }
    UnbiasednessReport r;
    r.bias_residual = std::hypot(mean[0] - e.anchor.theta1(), mean[1] - e.anchor.theta2());
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            r.derivative_residual =
                std::max(r.derivative_residual, std::abs(deriv[i][j] - (i == j ? 1.0 : 0.0)));
    return r;
}

/// Exact MSE matrix of an estimator table when the state is `truth`.
inline Sym2 exact_mse(const QuantumEstimator& e, const ThetaParams& truth) {
    const auto p = e.povm.probabilities(truth);
    Sym2 v;
    for (std::size_t x = 0; x < e.povm.size(); ++x) {
        const auto& est = e.estimates.at(e.povm[x].label);
        const double d0 = est[0] - truth.theta1();
        const double d1 = est[1] - truth.theta2();
        v(0, 0) += p[x] * d0 * d0;
        v(0, 1) += p[x] * d0 * d1;
        v(1, 1) += p[x] * d1 * d1;
    }
    return v;
}

/// Optimal POVM designed at the phase estimate instead of the true phase.
inline Povm build_phase_perturbed_povm(const ThetaParams& t_true, double theta3_estimate,
                                       const Sym2& w) {
    return build_optimal_povm(t_true.with_phase(theta3_estimate), w).povm;
}

/**
 * Prediction Delta J Delta, Delta = diag(cos d, 1), d = theta3_estimate - theta3,
 * for the classical Fisher at the true point of a POVM designed at the estimate.
 *
 * With `at_shifted_point` the design Fisher J is evaluated at
 * (theta1 cos d, theta2), which is where the true state projects onto the
 * design plane; the identity is then exact. Otherwise J = J[Pi_opt] at the
 * design point itself, which holds to leading order in d.
 */
inline Sym2 phase_perturbed_prediction(const ThetaParams& t_true, double theta3_estimate,
                                       const Sym2& w, bool at_shifted_point) {
    const double d = theta3_estimate - t_true.theta3();
    const ThetaParams design = t_true.with_phase(theta3_estimate);
    const Povm povm = build_optimal_povm(design, w).povm;
    const ThetaParams eval =
        at_shifted_point ? ThetaParams(t_true.theta1() * std::cos(d), t_true.theta2(), theta3_estimate)
                         : design;
    const Sym2 j = classical_fisher<2>(eval, povm).matrix;
    const double c = std::cos(d);
    Sym2 out;
    out(0, 0) = c * c * j(0, 0);
    out(0, 1) = c * j(0, 1);
    out(1, 1) = j(1, 1);
    return out;
}

} // namespace qest
