#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "qest/errors.hpp"
#include "qest/matrix.hpp"

namespace qest {

/// Eigenvalues below this magnitude on the negative side are treated as zero.
inline constexpr double psd_clamp_tolerance = 1e-12;
/// Eigenvalues below -psd_reject_tolerance make a matrix "not PSD".
inline constexpr double psd_reject_tolerance = 1e-9;

/// Spectral decomposition m = U diag(values) U^T, values sorted descending,
/// eigenvectors stored as the columns of `vectors`.
template <std::size_t N>
struct SymEig {
    std::array<double, N> values{};
    Matrix<N> vectors;

    [[nodiscard]] Vec3 column3(std::size_t c) const
        requires(N == 3)
    {
        return {vectors(0, c), vectors(1, c), vectors(2, c)};
    }
};

namespace detail {

inline void require_finite(bool finite) {
    if (!finite) fail(ErrorCode::non_finite, "matrix has non-finite entries");
}

inline SymEig<2> sym_eig2(const Sym2& m) {
    const double a = m(0, 0);
    const double b = m(0, 1);
    const double c = m(1, 1);
    const double mean = 0.5 * (a + c);
    const double radius = std::hypot(0.5 * (a - c), b);
    const double phi = 0.5 * std::atan2(2.0 * b, a - c);
    const double cs = std::cos(phi);
    const double sn = std::sin(phi);
    SymEig<2> out;
    out.values = {mean + radius, mean - radius};
    out.vectors = Mat2{{cs, -sn}, {sn, cs}};
    return out;
}

// Orthonormal pair (u, v) spanning the complement of unit vector w.
inline void orthogonal_complement(const Vec3& w, Vec3& u, Vec3& v) {
    if (std::abs(w[0]) > std::abs(w[1])) {
        const double inv = 1.0 / std::sqrt(w[0] * w[0] + w[2] * w[2]);
        u = {-w[2] * inv, 0.0, w[0] * inv};
    } else {
        const double inv = 1.0 / std::sqrt(w[1] * w[1] + w[2] * w[2]);
        u = {0.0, w[2] * inv, -w[1] * inv};
    }
    v = cross(w, u);
}

// Eigenvector for an isolated eigenvalue: the largest cross product of two
// rows of (A - lambda I) is orthogonal to both and hence spans the null space.
inline Vec3 isolated_eigenvector(const Mat3& a, double lambda) {
    const Vec3 r0{a(0, 0) - lambda, a(0, 1), a(0, 2)};
    const Vec3 r1{a(0, 1), a(1, 1) - lambda, a(1, 2)};
    const Vec3 r2{a(0, 2), a(1, 2), a(2, 2) - lambda};
    const std::array<Vec3, 3> cands{cross(r0, r1), cross(r0, r2), cross(r1, r2)};
    std::size_t best = 0;
    double best_norm = dot(cands[0], cands[0]);
    for (std::size_t i = 1; i < 3; ++i) {
        const double d = dot(cands[i], cands[i]);
        if (d > best_norm) {
            best_norm = d;
            best = i;
        }
    }
    if (best_norm == 0.0) return {1.0, 0.0, 0.0};
    return (1.0 / std::sqrt(best_norm)) * cands[best];
}

// Second eigenvector, found inside the plane orthogonal to `first` by solving
// the projected 2x2 problem.
inline Vec3 complement_eigenvector(const Mat3& a, const Vec3& first, double lambda) {
    Vec3 u;
    Vec3 v;
    orthogonal_complement(first, u, v);
    const Vec3 au = a * u;
    const Vec3 av = a * v;
    double m00 = dot(u, au) - lambda;
    double m01 = dot(u, av);
    double m11 = dot(v, av) - lambda;
    const double abs00 = std::abs(m00);
    const double abs01 = std::abs(m01);
    const double abs11 = std::abs(m11);
    if (abs00 >= abs11) {
        if (std::max(abs00, abs01) == 0.0) return u;
        if (abs00 >= abs01) {
            m01 /= m00;
            m00 = 1.0 / std::sqrt(1.0 + m01 * m01);
            m01 *= m00;
        } else {
            m00 /= m01;
            m01 = 1.0 / std::sqrt(1.0 + m00 * m00);
            m00 *= m01;
        }
        return m01 * u - m00 * v;
    }
    if (std::max(abs11, abs01) == 0.0) return u;
    if (abs11 >= abs01) {
        m01 /= m11;
        m11 = 1.0 / std::sqrt(1.0 + m01 * m01);
        m01 *= m11;
    } else {
        m11 /= m01;
        m01 = 1.0 / std::sqrt(1.0 + m11 * m11);
        m11 *= m01;
    }
    return m11 * u - m01 * v;
}

// One guarded Newton step on the characteristic polynomial
// p(x) = -x^3 + c2 x^2 - c1 x + c0.
inline double newton_polish(double root, double c2, double c1, double c0) {
    const double p = ((-root + c2) * root - c1) * root + c0;
    const double dp = (-3.0 * root + 2.0 * c2) * root - c1;
    if (dp == 0.0 || !std::isfinite(dp)) return root;
    const double next = root - p / dp;
    const double pn = ((-next + c2) * next - c1) * next + c0;
    return std::abs(pn) < std::abs(p) ? next : root;
}

inline SymEig<3> sym_eig3(const Sym3& input) {
    const double scale = input.max_abs();
    SymEig<3> out;
    if (scale == 0.0) {
        out.vectors = Mat3::identity();
        return out;
    }
    Mat3 a = input.dense() * (1.0 / scale);

    std::array<double, 3> evals{};
    std::array<Vec3, 3> evecs{};
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off > 0.0) {
        // Trigonometric solution of the characteristic cubic.
        const double q = a.trace() / 3.0;
        const double b00 = a(0, 0) - q;
        const double b11 = a(1, 1) - q;
        const double b22 = a(2, 2) - q;
        const double p = std::sqrt((b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off) / 6.0);
        const double c00 = b11 * b22 - a(1, 2) * a(1, 2);
        const double c01 = a(0, 1) * b22 - a(1, 2) * a(0, 2);
        const double c02 = a(0, 1) * a(1, 2) - b11 * a(0, 2);
        const double det = (b00 * c00 - a(0, 1) * c01 + a(0, 2) * c02) / (p * p * p);
        const double half_det = std::clamp(0.5 * det, -1.0, 1.0);
        const double angle = std::acos(half_det) / 3.0;
        constexpr double two_thirds_pi = 2.0 * std::numbers::pi / 3.0;
        const double beta2 = 2.0 * std::cos(angle);
        const double beta0 = 2.0 * std::cos(angle + two_thirds_pi);
        const double beta1 = -(beta0 + beta2);
        evals = {q + p * beta0, q + p * beta1, q + p * beta2};

        const double c2 = a.trace();
        const double c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2) - off;
        const double c0 = determinant(a);
        for (auto& e : evals) e = newton_polish(e, c2, c1, c0);

        // Start from the better-separated end of the spectrum.
        if (half_det >= 0.0) {
            evecs[2] = isolated_eigenvector(a, evals[2]);
            evecs[1] = complement_eigenvector(a, evecs[2], evals[1]);
            evecs[0] = cross(evecs[1], evecs[2]);
        } else {
            evecs[0] = isolated_eigenvector(a, evals[0]);
            evecs[1] = complement_eigenvector(a, evecs[0], evals[1]);
            evecs[2] = cross(evecs[0], evecs[1]);
        }
    } else {
        evals = {a(0, 0), a(1, 1), a(2, 2)};
        evecs = {Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, 0.0}, Vec3{0.0, 0.0, 1.0}};
    }

    // Rayleigh quotients are the most accurate eigenvalues for the computed basis.
    std::array<std::size_t, 3> order{0, 1, 2};
    for (std::size_t i = 0; i < 3; ++i) evals[i] = dot(evecs[i], a * evecs[i]);
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return evals[l] > evals[r]; });
    for (std::size_t c = 0; c < 3; ++c) {
        out.values[c] = evals[order[c]] * scale;
        for (std::size_t r = 0; r < 3; ++r) out.vectors(r, c) = evecs[order[c]][r];
    }
    return out;
}

template <std::size_t N>
SymMat<N> reconstruct(const Matrix<N>& u, const std::array<double, N>& values) {
    Matrix<N> lam = Matrix<N>::diagonal(values);
    return SymMat<N>::symmetrize(u * lam * u.transpose());
}

} // namespace detail

/// Symmetric eigendecomposition for 2x2 and 3x3 matrices by closed form.
template <std::size_t N>
SymEig<N> sym_eig(const SymMat<N>& m) {
    static_assert(N == 2 || N == 3, "sym_eig is implemented for 2x2 and 3x3");
    detail::require_finite(m.all_finite());
    if constexpr (N == 2) {
        return detail::sym_eig2(m);
    } else {
        return detail::sym_eig3(m);
    }
}

template <std::size_t N>
double min_eigenvalue(const SymMat<N>& m) {
    return sym_eig(m).values[N - 1];
}

template <std::size_t N>
bool is_psd(const SymMat<N>& m, double tol = psd_clamp_tolerance) {
    return min_eigenvalue(m) >= -tol;
}

/// Principal square root of a PSD matrix. Small negative eigenvalues
/// (down to -1e-9) are clamped to zero; anything below is rejected.
template <std::size_t N>
SymMat<N> psd_sqrt(const SymMat<N>& m) {
    auto eig = sym_eig(m);
    for (auto& v : eig.values) {
        if (v < -psd_reject_tolerance) {
            fail(ErrorCode::not_psd, "matrix has eigenvalue " + std::to_string(v) + " < -1e-9");
        }
        v = v > 0.0 ? std::sqrt(v) : 0.0;
    }
    return detail::reconstruct(eig.vectors, eig.values);
}

/// Uhlmann-type fidelity Tr sqrt(sqrt(a) b sqrt(a)) of two PSD matrices.
template <std::size_t N>
double fidelity(const SymMat<N>& a, const SymMat<N>& b) {
    const SymMat<N> ra = psd_sqrt(a);
    const SymMat<N> inner = SymMat<N>::symmetrize(ra.dense() * b.dense() * ra.dense());
    auto eig = sym_eig(inner);
    double f = 0.0;
    for (double v : eig.values) {
        if (v < -psd_reject_tolerance) {
            fail(ErrorCode::not_psd, "fidelity argument is not PSD");
        }
        f += v > 0.0 ? std::sqrt(v) : 0.0;
    }
    return f;
}

/// Sum of moduli of the eigenvalues of a 3x3 real matrix.
///
/// Supported structures: symmetric matrices (general spectral route), and
/// traceless singular matrices whose spectrum is {0, +z, -z} with z real or
/// purely imaginary. The latter covers W * A for symmetric W and
/// antisymmetric A, where the sum is sqrt(2 |Tr m^2|).
inline double trabs(const GenMat3& m) {
    detail::require_finite(m.all_finite());
    const double scale = std::max(1.0, m.max_abs());
    const double structure_tol = 1e-9 * scale * scale * scale;
    if (std::abs(m.trace()) <= 1e-9 * scale && std::abs(determinant(m)) <= structure_tol) {
        // Odd power traces must also vanish for the {0, +z, -z} spectrum.
        const double tr2 = (m * m).trace();
        const double tr3 = (m * m * m).trace();
        if (std::abs(tr3) <= structure_tol) {
            return std::sqrt(2.0 * std::abs(tr2));
        }
    }
    bool symmetric = true;
    for (std::size_t i = 0; i < 3 && symmetric; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) symmetric = false;
    if (symmetric) {
        const auto eig = sym_eig(Sym3::symmetrize(m));
        return std::abs(eig.values[0]) + std::abs(eig.values[1]) + std::abs(eig.values[2]);
    }
    fail(ErrorCode::unsupported_structure,
         "trabs supports symmetric or traceless singular {0,+z,-z} matrices only");
}

/// Schur complement J_II - J_IN J_NN^{-1} J_NI for the partition I = {1, 2}, N = {3}.
inline Sym2 schur_complement(const Sym3& j) {
    const double jnn = j(2, 2);
    if (!(std::abs(jnn) > 1e-300) || !std::isfinite(jnn)) {
        fail(ErrorCode::singular, "nuisance block of the information matrix is singular");
    }
    Sym2 out;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = a; b < 2; ++b) out(a, b) = j(a, b) - j(a, 2) * j(b, 2) / jnn;
    return out;
}

/// Upper-left 2x2 block of a 3x3 symmetric matrix.
inline Sym2 interest_block(const Sym3& m) {
    Sym2 out;
    out(0, 0) = m(0, 0);
    out(0, 1) = m(0, 1);
    out(1, 1) = m(1, 1);
    return out;
}

} // namespace qest
