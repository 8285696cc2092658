#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "qest/errors.hpp"
#include "qest/kernels.hpp"
#include "qest/matrix.hpp"
#include "qest/model.hpp"
#include "qest/povm.hpp"

namespace qest {

enum class FisherKind { classical, sld };

template <std::size_t K>
struct FisherMatrix {
    SymMat<K> matrix;
    FisherKind kind = FisherKind::sld;
};

template <std::size_t K>
struct RldFisherMatrix {
    HermMat<K> matrix;
};

/// SLD operators L_i, kept in Pauli coordinates.
template <std::size_t K>
struct SldOperators {
    std::array<PauliOperator, K> ops{};

    [[nodiscard]] Herm2 matrix(std::size_t i) const { return ops[i].matrix(); }
};

// Symmetrised product (rho X + X rho) / 2 for Pauli-form operators.
inline PauliOperator jordan_product(const PauliOperator& a, const PauliOperator& b) {
    // {a0 + a.sigma, b0 + b.sigma}/2 = (a0 b0 + a.b) + (a0 b + b0 a).sigma
    return {a.c0 * b.c0 + dot(a.c, b.c), a.c0 * b.c + b.c0 * a.c};
}

/// Closed-form SLD operators in Bloch form:
/// L_i = -(<d_i s, s>/(1 - s^2)) sigma0 + (d_i s + (<d_i s, s>/(1 - s^2)) s) . sigma.
template <std::size_t K>
SldOperators<K> sld_operators(const ThetaParams& t) {
    const BlochVector b = bloch_from_theta(t);
    const auto ds = bloch_derivatives<K>(t);
    const double one_minus_s2 = 1.0 - b.norm_squared();
    SldOperators<K> out;
    for (std::size_t i = 0; i < K; ++i) {
        const double coef = dot(ds[i], b.s) / one_minus_s2;
        out.ops[i] = {-coef, ds[i] + coef * b.s};
    }
    return out;
}

/**
 * SLD operators obtained by solving d_i rho = (rho L + L rho)/2 directly.
 *
 * The map L -> (rho L + L rho)/2 is expanded on {sigma0, sigma1, sigma2,
 * sigma3} with explicit complex 2x2 products, giving a 4x4 real system that
 * is solved by Gaussian elimination. Independent of the Bloch closed form.
 */
template <std::size_t K>
SldOperators<K> sld_operators_oracle(const ThetaParams& t) {
    const CMat2 rho = state_from_theta(t).matrix().dense();
    const std::array<CMat2, 4> basis{
        CMat2{{1.0, 0.0}, {0.0, 1.0}},
        CMat2{{0.0, 1.0}, {1.0, 0.0}},
        CMat2{{0.0, complex{0.0, -1.0}}, {complex{0.0, 1.0}, 0.0}},
        CMat2{{1.0, 0.0}, {0.0, -1.0}},
    };
    // coordinate of a Hermitian M along sigma_mu is Tr(sigma_mu M)/2
    auto coords = [&](const CMat2& m) {
        std::array<double, 4> c{};
        for (std::size_t mu = 0; mu < 4; ++mu) c[mu] = 0.5 * (basis[mu] * m).trace().real();
        return c;
    };
    Matrix<4> system;
    for (std::size_t nu = 0; nu < 4; ++nu) {
        const CMat2 image = 0.5 * (rho * basis[nu] + basis[nu] * rho);
        const auto c = coords(image);
        for (std::size_t mu = 0; mu < 4; ++mu) system(mu, nu) = c[mu];
    }
    Matrix<4> inv;
    try {
        inv = inverse(system, 1e-13);
    } catch (const Error&) {
        fail(ErrorCode::singular, "SLD system is singular; the state is not full rank");
    }
    SldOperators<K> out;
    for (std::size_t i = 0; i < K; ++i) {
        const auto rhs = coords(density_derivative(t, i).dense());
        const auto x = inv * rhs;
        out.ops[i] = {x[0], Vec3{x[1], x[2], x[3]}};
    }
    return out;
}

/// SLD Fisher matrix g_ij = <d_i s, d_j s> + <d_i s, s><s, d_j s>/(1 - s^2).
template <std::size_t K>
FisherMatrix<K> sld_fisher(const ThetaParams& t) {
    const BlochVector b = bloch_from_theta(t);
    const auto ds = bloch_derivatives<K>(t);
    const double one_minus_s2 = 1.0 - b.norm_squared();
    SymMat<K> g;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = i; j < K; ++j)
            g(i, j) = dot(ds[i], ds[j]) + dot(ds[i], b.s) * dot(b.s, ds[j]) / one_minus_s2;
    return {g, FisherKind::sld};
}

/// Closed-form inverse SLD Fisher matrix:
/// [[1 - t1^2, -t1 t2], [-t1 t2, 1 - t2^2]], plus g^33 = 1/t1^2 on a
/// decoupled diagonal block when K = 3.
template <std::size_t K>
SymMat<K> sld_fisher_inverse(const ThetaParams& t) {
    static_assert(K == 2 || K == 3);
    const double t1 = t.theta1();
    const double t2 = t.theta2();
    SymMat<K> m;
    m(0, 0) = 1.0 - t1 * t1;
    m(0, 1) = -t1 * t2;
    m(1, 1) = 1.0 - t2 * t2;
    if constexpr (K == 3) m(2, 2) = 1.0 / (t1 * t1);
    return m;
}

/// g^33 = 1/theta1^2.
inline double phase_sld_variance(const ThetaParams& t) { return 1.0 / (t.theta1() * t.theta1()); }

/// RLD Fisher matrix (<d_i s, d_j s> + i <d_i s x d_j s, s>)/(1 - s^2).
template <std::size_t K>
RldFisherMatrix<K> rld_fisher(const ThetaParams& t) {
    const BlochVector b = bloch_from_theta(t);
    const auto ds = bloch_derivatives<K>(t);
    const double one_minus_s2 = 1.0 - b.norm_squared();
    HermMat<K> g;
    for (std::size_t i = 0; i < K; ++i) {
        g.set_diagonal(i, dot(ds[i], ds[i]) / one_minus_s2);
        for (std::size_t j = i + 1; j < K; ++j) {
            g.set(i, j, complex{dot(ds[i], ds[j]), dot(cross(ds[i], ds[j]), b.s)} / one_minus_s2);
        }
    }
    return {g};
}

/// Closed-form inverse RLD Fisher matrix. For K = 2 it is (1 - s^2) I; for
/// K = 3 the real part equals the inverse SLD matrix and the imaginary part
/// has (1,3) = -theta2/theta1 and (2,3) = +1.
template <std::size_t K>
HermMat<K> rld_fisher_inverse(const ThetaParams& t) {
    static_assert(K == 2 || K == 3);
    if constexpr (K == 2) {
        return HermMat<2>::from_real(Sym2::identity() * (1.0 - t.radius_squared()));
    } else {
        HermMat<3> m = HermMat<3>::from_real(sld_fisher_inverse<3>(t));
        m.set(0, 2, complex{0.0, -t.theta2() / t.theta1()});
        m.set(1, 2, complex{0.0, 1.0});
        return m;
    }
}

/// Probabilities below this are treated as structurally zero outcomes.
inline constexpr double dead_outcome_probability = 1e-14;

/// Classical Fisher matrix J_ij = sum_x d_i p d_j p / p of a POVM on the model,
/// with d_i p = Tr(d_i rho Pi_x) = <d_i s, c_x>.
template <std::size_t K>
FisherMatrix<K> classical_fisher(const ThetaParams& t, const Povm& povm) {
    const BlochVector b = bloch_from_theta(t);
    const auto ds = bloch_derivatives<K>(t);
    SymMat<K> j;
    for (const auto& e : povm.elements()) {
        const double p = e.op.expectation(b);
        std::array<double, K> grad{};
        double grad_norm = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            grad[i] = dot(ds[i], e.op.c);
            grad_norm = std::max(grad_norm, std::abs(grad[i]));
        }
        if (p < dead_outcome_probability) {
            if (grad_norm == 0.0) continue;
            fail(ErrorCode::singular_model,
                 "outcome '" + e.label + "' has vanishing probability but nonzero gradient");
        }
        for (std::size_t a = 0; a < K; ++a)
            for (std::size_t c = a; c < K; ++c) j(a, c) += grad[a] * grad[c] / p;
    }
    return {j, FisherKind::classical};
}

/// Effective information on (theta1, theta2) when theta3 is a nuisance
/// parameter: J_II - J_IN J_NN^{-1} J_NI.
inline FisherMatrix<2> effective_fisher(const FisherMatrix<3>& j) {
    return {schur_complement(j.matrix), j.kind};
}

} // namespace qest
