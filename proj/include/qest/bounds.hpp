#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <variant>

#include "qest/errors.hpp"
#include "qest/fisher.hpp"
#include "qest/kernels.hpp"
#include "qest/matrix.hpp"
#include "qest/model.hpp"

namespace qest {

/// Block weight diag(W2, w3) for the three-parameter model.
struct BlockWeight {
    Sym2 interest = Sym2::identity();
    double phase = 1.0;

    [[nodiscard]] Sym3 expand() const {
        Sym3 w;
        w(0, 0) = interest(0, 0);
        w(0, 1) = interest(0, 1);
        w(1, 1) = interest(1, 1);
        w(2, 2) = phase;
        return w;
    }
};

/// Weight for k = 3: either a full 3x3 matrix or the declared block form.
/// Blockness is never inferred from numeric zeros.
class Weight3 {
public:
    Weight3(const Sym3& full) : value_(full) { check_pd(full); } // NOLINT(implicit)
    Weight3(const BlockWeight& block) : value_(block) { // NOLINT(implicit)
        check_pd(block.expand());
    }

    [[nodiscard]] bool is_block() const { return std::holds_alternative<BlockWeight>(value_); }
    [[nodiscard]] const BlockWeight& block() const { return std::get<BlockWeight>(value_); }
    [[nodiscard]] Sym3 full() const {
        if (is_block()) return block().expand();
        return std::get<Sym3>(value_);
    }

private:
    static void check_pd(const Sym3& w) {
        if (!(min_eigenvalue(w) > 0.0)) {
            fail(ErrorCode::invalid_argument, "weight matrix must be positive definite");
        }
    }

    std::variant<Sym3, BlockWeight> value_;
};

inline void require_positive_definite(const Sym2& w) {
    if (!(min_eigenvalue(w) > 0.0)) {
        fail(ErrorCode::invalid_argument, "weight matrix must be positive definite");
    }
}

// SLD Cramer-Rao: Tr(W G^{-1})

template <std::size_t K>
double sld_cr_bound(const ThetaParams& t, const SymMat<K>& w) {
    return trace_product(w, sld_fisher_inverse<K>(t));
}

inline double sld_cr_bound(const ThetaParams& t, const Weight3& w) {
    return sld_cr_bound<3>(t, w.full());
}

// RLD Cramer-Rao: Tr(W Re G~^{-1}) + TrAbs(W Im G~^{-1})

inline double rld_cr_bound(const ThetaParams& t, const Sym2& w) {
    const Herm2 inv = inverse(rld_fisher<2>(t).matrix);
    // 2x2: W * (antisymmetric) has eigenvalues +-i a sqrt(det W)
    const double im = inv(0, 1).imag();
    return trace_product(w, inv.real_part()) + 2.0 * std::abs(im) * std::sqrt(determinant(w));
}

inline double rld_cr_bound(const ThetaParams& t, const Weight3& w) {
    const Herm3 inv = inverse(rld_fisher<3>(t).matrix);
    const Sym3 wf = w.full();
    return trace_product(wf, inv.real_part()) + trabs(wf.dense() * inv.imag_part());
}

/// Nagaoka bound Tr(W G^{-1}) + 2 sqrt(det(W G^{-1})) for the known-phase model.
inline double nagaoka_bound(const ThetaParams& t, const Sym2& w) {
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    return trace_product(w, ginv) + 2.0 * std::sqrt(determinant(w) * determinant(ginv));
}

template <std::size_t K>
struct HgmResult {
    double value = 0.0;
    /// Eigenvalues of F = sqrt(G^{-1}) W sqrt(G^{-1}), descending.
    std::array<double, K> lambdas{};
    /// Orthogonal matrix diagonalising F (eigenvectors as columns).
    Matrix<K> u;
};

/// sqrt(G^{-1}) W sqrt(G^{-1}).
template <std::size_t K>
SymMat<K> weighted_information_matrix(const ThetaParams& t, const SymMat<K>& w) {
    const Matrix<K> r = psd_sqrt(sld_fisher_inverse<K>(t)).dense();
    return SymMat<K>::symmetrize(r * w.dense() * r);
}

/// HGM bound (F(G^{-1}, W))^2 evaluated through the fidelity, together with
/// the spectral data (lambda_i, U) of F.
template <std::size_t K>
HgmResult<K> hgm_bound(const ThetaParams& t, const SymMat<K>& w) {
    HgmResult<K> out;
    const double f = fidelity(sld_fisher_inverse<K>(t), w);
    out.value = f * f;
    const auto eig = sym_eig(weighted_information_matrix<K>(t, w));
    out.lambdas = eig.values;
    out.u = eig.vectors;
    return out;
}

inline HgmResult<3> hgm_bound(const ThetaParams& t, const Weight3& w) {
    return hgm_bound<3>(t, w.full());
}

/// Block-weight composition (sqrt(C^N[W2]) + sqrt(w3 g^33))^2.
inline double hgm_bound_block(const ThetaParams& t, const BlockWeight& w) {
    const double a = std::sqrt(nagaoka_bound(t, w.interest));
    const double b = std::sqrt(w.phase * phase_sld_variance(t));
    return (a + b) * (a + b);
}

/// Inflation factor v33 / (v33 - g33) caused by a finite phase error v33.
inline double gamma_factor(double v33, double g33) {
    if (!(g33 > 0.0) || !std::isfinite(v33)) {
        fail(ErrorCode::invalid_argument, "gamma factor needs g33 > 0 and finite v33");
    }
    if (!(v33 > g33)) {
        fail(ErrorCode::infeasible_mse,
             "v33 must exceed g33: no locally unbiased estimator has v33 <= g33");
    }
    return v33 / (v33 - g33);
}

/// Holevo bound with the phase as a nuisance parameter. The three-parameter
/// qubit model is D-invariant, so this is the RLD expression
/// Tr(W G(3)^{-1}) + TrAbs(W Im G~(3)^{-1}) using the closed-form inverses.
inline double holevo_bound_k3(const ThetaParams& t, const Weight3& w) {
    const Herm3 inv = rld_fisher_inverse<3>(t);
    const Sym3 wf = w.full();
    return trace_product(wf, sld_fisher_inverse<3>(t)) + trabs(wf.dense() * inv.imag_part());
}

/// Block-weight form Tr(W2 G^{-1}) + w3 g33 + 2 sqrt(w3 g33) sqrt(Tr W2 (G^{-1} - G~^{-1})).
inline double holevo_bound_k3_block(const ThetaParams& t, const BlockWeight& w) {
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    const Sym2 rinv = rld_fisher_inverse<2>(t).real_part();
    const double phase_term = w.phase * phase_sld_variance(t);
    return trace_product(w.interest, ginv) + phase_term +
           2.0 * std::sqrt(phase_term) * std::sqrt(trace_product(w.interest, ginv - rinv));
}

// ---------------------------------------------------------------------------
// Holevo bound for the known-phase model by direct minimisation.

/// Holevo function of two Bloch vectors x1, x2 (the operators
/// X^i = -<s, x^i> sigma0 + x^i . sigma):
/// sum_ij w_ij (<x^i,x^j> - <x^i,s><s,x^j>) + 2 sqrt(det W) |<x^1 x x^2, s>|.
inline double holevo_function_k2(const ThetaParams& t, const Sym2& w, const Vec3& x1,
                                 const Vec3& x2) {
    const Vec3 s = bloch_from_theta(t).s;
    const std::array<Vec3, 2> x{x1, x2};
    double re = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            re += w(i, j) * (dot(x[i], x[j]) - dot(x[i], s) * dot(s, x[j]));
    return re + 2.0 * std::sqrt(determinant(w)) * std::abs(dot(cross(x1, x2), s));
}

struct NelderMeadResult {
    std::array<double, 2> point{};
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimiser in two variables.
inline NelderMeadResult nelder_mead_2d(const std::function<double(double, double)>& f,
                                       std::array<double, 2> start, double initial_step,
                                       double size_tol = 1e-10, int max_iter = 5000) {
    using P = std::array<double, 2>;
    std::array<P, 3> x{start, P{start[0] + initial_step, start[1]},
                       P{start[0], start[1] + initial_step}};
    std::array<double, 3> fx{};
    for (std::size_t i = 0; i < 3; ++i) fx[i] = f(x[i][0], x[i][1]);
    NelderMeadResult res;
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        std::array<std::size_t, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const P best = x[o[0]];
        const P mid = x[o[1]];
        const P worst = x[o[2]];
        double size = 0.0;
        for (std::size_t i = 1; i < 3; ++i)
            size = std::max(size, std::hypot(x[o[i]][0] - best[0], x[o[i]][1] - best[1]));
        if (size < size_tol) {
            res.converged = true;
            break;
        }
        const P centroid{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
        auto along = [&](double c) {
            return P{centroid[0] + c * (worst[0] - centroid[0]),
                     centroid[1] + c * (worst[1] - centroid[1])};
        };
        const P refl = along(-1.0);
        const double fr = f(refl[0], refl[1]);
        if (fr < fx[o[0]]) {
            const P exp = along(-2.0);
            const double fe = f(exp[0], exp[1]);
            if (fe < fr) {
                x[o[2]] = exp;
                fx[o[2]] = fe;
            } else {
                x[o[2]] = refl;
                fx[o[2]] = fr;
            }
            continue;
        }
        if (fr < fx[o[1]]) {
            x[o[2]] = refl;
            fx[o[2]] = fr;
            continue;
        }
        const P con = fr < fx[o[2]] ? along(-0.5) : along(0.5);
        const double fc = f(con[0], con[1]);
        if (fc < std::min(fr, fx[o[2]])) {
            x[o[2]] = con;
            fx[o[2]] = fc;
            continue;
        }
        // shrink towards the best vertex
        for (std::size_t i = 1; i < 3; ++i) {
            auto& v = x[o[i]];
            v = P{best[0] + 0.5 * (v[0] - best[0]), best[1] + 0.5 * (v[1] - best[1])};
            fx[o[i]] = f(v[0], v[1]);
        }
    }
    std::size_t b = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (fx[i] < fx[b]) b = i;
    res.point = x[b];
    res.value = fx[b];
    return res;
}

struct HolevoK2Result {
    double value = 0.0;
    std::array<Vec3, 2> x_opt{};
    bool converged = false;
};

/**
 * Holevo bound for the known-phase model by minimising the Holevo function.
 *
 * Each x^i satisfies <x^i, d_j s> = delta_ij, so x^i = p^i + t_i n with p^i
 * the minimum-norm particular solution and n the unit normal of the tangent
 * plane. The convex objective in (t_1, t_2) is scanned on a 41 x 41 grid over
 * [-10, 10]^2, then polished by Nelder-Mead (restarted until the simplex
 * collapses without further improvement).
 */
inline HolevoK2Result holevo_bound_k2(const ThetaParams& t, const Sym2& w) {
    require_positive_definite(w);
    const auto ds = bloch_derivatives<2>(t);
    // p^i = sum_j (M^{-1})_ij d_j s with Gram matrix M_jl = <d_j s, d_l s>
    Sym2 gram;
    gram(0, 0) = dot(ds[0], ds[0]);
    gram(0, 1) = dot(ds[0], ds[1]);
    gram(1, 1) = dot(ds[1], ds[1]);
    const Sym2 ginv = inverse(gram);
    const std::array<Vec3, 2> particular{ginv(0, 0) * ds[0] + ginv(0, 1) * ds[1],
                                         ginv(1, 0) * ds[0] + ginv(1, 1) * ds[1]};
    const Vec3 normal = normalized(cross(ds[0], ds[1]));

    auto objective = [&](double t1, double t2) {
        return holevo_function_k2(t, w, particular[0] + t1 * normal, particular[1] + t2 * normal);
    };

    std::array<double, 2> best{0.0, 0.0};
    double best_val = std::numeric_limits<double>::infinity();
    constexpr int grid = 41;
    for (int a = 0; a < grid; ++a) {
        for (int b = 0; b < grid; ++b) {
            const double t1 = -10.0 + 20.0 * a / (grid - 1);
            const double t2 = -10.0 + 20.0 * b / (grid - 1);
            const double v = objective(t1, t2);
            if (v < best_val) {
                best_val = v;
                best = {t1, t2};
            }
        }
    }

    HolevoK2Result out;
    double step = 0.5;
    for (int restart = 0; restart < 20; ++restart) {
        const auto nm = nelder_mead_2d(objective, best, step);
        const bool improved = nm.value < best_val - 1e-15;
        if (nm.value <= best_val) {
            best = nm.point;
            best_val = nm.value;
        }
        out.converged = nm.converged;
        if (!improved) break;
        step = 0.05;
    }
    if (!out.converged) {
        fail(ErrorCode::non_convergence, "Holevo minimisation did not converge");
    }
    out.value = best_val;
    out.x_opt = {particular[0] + best[0] * normal, particular[1] + best[1] * normal};
    return out;
}

/// Cotangent SLD vectors: Bloch parts of L^j = sum_i (G^{-1})_ij L_i.
inline std::array<Vec3, 2> cotangent_sld_vectors(const ThetaParams& t) {
    const auto sld = sld_operators<2>(t);
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    std::array<Vec3, 2> out{};
    for (std::size_t j = 0; j < 2; ++j)
        out[j] = ginv(0, j) * sld.ops[0].c + ginv(1, j) * sld.ops[1].c;
    return out;
}

// ---------------------------------------------------------------------------

struct BoundReport {
    double sld_cr = 0.0;
    double rld_cr = 0.0;
    double nagaoka_hgm = 0.0;
    double holevo = 0.0;
    std::optional<double> gamma;
    int k = 2;
};

/// All bounds for the known-phase (k = 2) model.
inline BoundReport bound_report(const ThetaParams& t, const Sym2& w) {
    require_positive_definite(w);
    BoundReport r;
    r.k = 2;
    r.sld_cr = sld_cr_bound<2>(t, w);
    r.rld_cr = rld_cr_bound(t, w);
    r.nagaoka_hgm = nagaoka_bound(t, w);
    r.holevo = holevo_bound_k2(t, w).value;
    return r;
}

/// All bounds with the phase as a nuisance parameter (k = 3).
inline BoundReport bound_report(const ThetaParams& t, const Weight3& w) {
    BoundReport r;
    r.k = 3;
    r.sld_cr = sld_cr_bound(t, w);
    r.rld_cr = rld_cr_bound(t, w);
    r.nagaoka_hgm = w.is_block() ? hgm_bound_block(t, w.block()) : hgm_bound(t, w).value;
    r.holevo = holevo_bound_k3(t, w);
    return r;
}

} // namespace qest
