#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <type_traits>

#include "qest/errors.hpp"

namespace qest {

using complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
inline double magnitude(const T& x) {
    return std::abs(x);
}

template <typename T>
inline T conjugate(const T& x) {
    if constexpr (is_complex<T>::value) {
        return std::conj(x);
    } else {
        return x;
    }
}

/**
 * Dense fixed-size square matrix, row-major.
 *
 * Only the handful of operations the estimation code needs are provided;
 * everything is sized at compile time (N is 2 or 3 in practice).
 */
template <std::size_t N, typename T = double>
class Matrix {
public:
    using value_type = T;
    static constexpr std::size_t dim = N;

    constexpr Matrix() = default;

    Matrix(std::initializer_list<std::initializer_list<T>> rows) {
        if (rows.size() != N) {
            fail(ErrorCode::invalid_argument, "matrix row count mismatch");
        }
        std::size_t r = 0;
        for (const auto& row : rows) {
            if (row.size() != N) {
                fail(ErrorCode::invalid_argument, "matrix column count mismatch");
            }
            std::size_t c = 0;
            for (const auto& v : row) {
                (*this)(r, c++) = v;
            }
            ++r;
        }
    }

    static Matrix identity() {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) {
            m(i, i) = T{1};
        }
        return m;
    }

    static Matrix diagonal(const std::array<double, N>& d) {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) {
            m(i, i) = T{d[i]};
        }
        return m;
    }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * N + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * N + c]; }

    Matrix& operator+=(const Matrix& o) {
        for (std::size_t i = 0; i < N * N; ++i) data_[i] += o.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        for (std::size_t i = 0; i < N * N; ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Matrix& operator*=(T s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, T s) { return a *= s; }
    friend Matrix operator*(T s, Matrix a) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= T{-1}; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        Matrix out;
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t k = 0; k < N; ++k) {
                const T aik = a(i, k);
                for (std::size_t j = 0; j < N; ++j) {
                    out(i, j) += aik * b(k, j);
                }
            }
        }
        return out;
    }

    friend std::array<T, N> operator*(const Matrix& a, const std::array<T, N>& v) {
        std::array<T, N> out{};
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < N; ++j) {
                out[i] += a(i, j) * v[j];
            }
        }
        return out;
    }

    [[nodiscard]] Matrix transpose() const {
        Matrix t;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    [[nodiscard]] Matrix adjoint() const {
        Matrix t;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) t(j, i) = conjugate((*this)(i, j));
        return t;
    }

    [[nodiscard]] T trace() const {
        T s{};
        for (std::size_t i = 0; i < N; ++i) s += (*this)(i, i);
        return s;
    }

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (const auto& v : data_) m = std::max(m, magnitude(v));
        return m;
    }

    [[nodiscard]] bool all_finite() const {
        for (const auto& v : data_) {
            if constexpr (is_complex<T>::value) {
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
            } else {
                if (!std::isfinite(v)) return false;
            }
        }
        return true;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::array<T, N * N> data_{};
};

using Mat2 = Matrix<2>;
using Mat3 = Matrix<3>;
using CMat2 = Matrix<2, complex>;
using CMat3 = Matrix<3, complex>;

/// General 3x3 real matrix with no symmetry constraint.
using GenMat3 = Mat3;

template <std::size_t N, typename T>
double max_abs_diff(const Matrix<N, T>& a, const Matrix<N, T>& b) {
    return (a - b).max_abs();
}

template <std::size_t N, typename T>
T determinant(const Matrix<N, T>& m) {
    static_assert(N == 2 || N == 3, "determinant implemented for 2x2 and 3x3");
    if constexpr (N == 2) {
        return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    } else {
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    }
}

/// Gauss-Jordan inverse with partial pivoting. Throws ErrorCode::singular when
/// a pivot falls below `tol` relative to the largest entry.
template <std::size_t N, typename T>
Matrix<N, T> inverse(const Matrix<N, T>& m, double tol = 1e-14) {
    Matrix<N, T> a = m;
    Matrix<N, T> inv = Matrix<N, T>::identity();
    const double scale = std::max(m.max_abs(), 1e-300);
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        double best = magnitude(a(col, col));
        for (std::size_t r = col + 1; r < N; ++r) {
            if (magnitude(a(r, col)) > best) {
                best = magnitude(a(r, col));
                piv = r;
            }
        }
        if (best <= tol * scale) {
            fail(ErrorCode::singular, "matrix is singular to working precision");
        }
        if (piv != col) {
            for (std::size_t c = 0; c < N; ++c) {
                std::swap(a(piv, c), a(col, c));
                std::swap(inv(piv, c), inv(col, c));
            }
        }
        const T d = a(col, col);
        for (std::size_t c = 0; c < N; ++c) {
            a(col, c) /= d;
            inv(col, c) /= d;
        }
        for (std::size_t r = 0; r < N; ++r) {
            if (r == col) continue;
            const T f = a(r, col);
            if (f == T{}) continue;
            for (std::size_t c = 0; c < N; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

/// Real symmetric matrix with packed upper-triangle storage: one value per
/// (i, j) pair, so symmetry holds by construction.
template <std::size_t N>
class SymMat {
public:
    static constexpr std::size_t dim = N;
    static constexpr std::size_t packed_size = N * (N + 1) / 2;

    constexpr SymMat() = default;

    /// Rows must be symmetric to within 1e-12 (relative to the largest entry).
    SymMat(std::initializer_list<std::initializer_list<double>> rows)
        : SymMat(from_dense(Matrix<N>(rows))) {}

    /// Checked conversion. Off-diagonal pairs are averaged after the check.
    static SymMat from_dense(const Matrix<N>& m, double tol = 1e-12) {
        const double scale = std::max(1.0, m.max_abs());
        SymMat s;
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = i; j < N; ++j) {
                if (std::abs(m(i, j) - m(j, i)) > tol * scale) {
                    fail(ErrorCode::invalid_argument, "matrix is not symmetric");
                }
                s(i, j) = 0.5 * (m(i, j) + m(j, i));
            }
        }
        return s;
    }

    /// Unchecked symmetrisation, for products that are symmetric in exact arithmetic.
    static SymMat symmetrize(const Matrix<N>& m) {
        SymMat s;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i; j < N; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
        return s;
    }

    static SymMat identity() { return symmetrize(Matrix<N>::identity()); }
    static SymMat diagonal(const std::array<double, N>& d) {
        return symmetrize(Matrix<N>::diagonal(d));
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }

    [[nodiscard]] Matrix<N> dense() const {
        Matrix<N> m;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) m(i, j) = (*this)(i, j);
        return m;
    }

    [[nodiscard]] double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < N; ++i) t += (*this)(i, i);
        return t;
    }

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    SymMat& operator+=(const SymMat& o) {
        for (std::size_t i = 0; i < packed_size; ++i) data_[i] += o.data_[i];
        return *this;
    }
    SymMat& operator-=(const SymMat& o) {
        for (std::size_t i = 0; i < packed_size; ++i) data_[i] -= o.data_[i];
        return *this;
    }
    SymMat& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
    friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
    friend SymMat operator*(SymMat a, double s) { return a *= s; }
    friend SymMat operator*(double s, SymMat a) { return a *= s; }

    friend bool operator==(const SymMat&, const SymMat&) = default;

private:
    static constexpr std::size_t index(std::size_t i, std::size_t j) {
        if (i > j) std::swap(i, j);
        // row-major upper triangle
        return i * N - i * (i - 1) / 2 + (j - i);
    }

    std::array<double, packed_size> data_{};
};

using Sym2 = SymMat<2>;
using Sym3 = SymMat<3>;

template <std::size_t N>
double max_abs_diff(const SymMat<N>& a, const SymMat<N>& b) {
    return (a - b).max_abs();
}

template <std::size_t N>
double determinant(const SymMat<N>& m) {
    return determinant(m.dense());
}

template <std::size_t N>
SymMat<N> inverse(const SymMat<N>& m) {
    return SymMat<N>::symmetrize(inverse(m.dense()));
}

/// Tr(A B) for symmetric arguments.
template <std::size_t N>
double trace_product(const SymMat<N>& a, const SymMat<N>& b) {
    double t = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) t += a(i, j) * b(j, i);
    return t;
}

/// Complex Hermitian matrix. The strictly upper triangle is stored as complex
/// values, the diagonal as reals, so Hermiticity holds by construction.
template <std::size_t N>
class HermMat {
public:
    static constexpr std::size_t dim = N;

    constexpr HermMat() = default;

    static HermMat from_dense(const Matrix<N, complex>& m, double tol = 1e-12) {
        const double scale = std::max(1.0, m.max_abs());
        HermMat h;
        for (std::size_t i = 0; i < N; ++i) {
            if (std::abs(m(i, i).imag()) > tol * scale) {
                fail(ErrorCode::invalid_argument, "matrix diagonal is not real");
            }
            h.diag_[i] = m(i, i).real();
            for (std::size_t j = i + 1; j < N; ++j) {
                if (std::abs(m(i, j) - std::conj(m(j, i))) > tol * scale) {
                    fail(ErrorCode::invalid_argument, "matrix is not Hermitian");
                }
                h.upper_[upper_index(i, j)] = 0.5 * (m(i, j) + std::conj(m(j, i)));
            }
        }
        return h;
    }

    static HermMat from_real(const SymMat<N>& s) {
        HermMat h;
        for (std::size_t i = 0; i < N; ++i) {
            h.diag_[i] = s(i, i);
            for (std::size_t j = i + 1; j < N; ++j) h.upper_[upper_index(i, j)] = s(i, j);
        }
        return h;
    }

    [[nodiscard]] complex operator()(std::size_t i, std::size_t j) const {
        if (i == j) return {diag_[i], 0.0};
        if (i < j) return upper_[upper_index(i, j)];
        return std::conj(upper_[upper_index(j, i)]);
    }

    void set_diagonal(std::size_t i, double v) { diag_[i] = v; }
    /// Sets (i, j) and implicitly (j, i) = conj(v). Requires i != j.
    void set(std::size_t i, std::size_t j, complex v) {
        if (i == j) fail(ErrorCode::invalid_argument, "use set_diagonal for diagonal entries");
        if (i < j) {
            upper_[upper_index(i, j)] = v;
        } else {
            upper_[upper_index(j, i)] = std::conj(v);
        }
    }

    [[nodiscard]] Matrix<N, complex> dense() const {
        Matrix<N, complex> m;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) m(i, j) = (*this)(i, j);
        return m;
    }

    [[nodiscard]] SymMat<N> real_part() const {
        SymMat<N> s;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i; j < N; ++j) s(i, j) = (*this)(i, j).real();
        return s;
    }

    /// Imaginary part; antisymmetric by construction.
    [[nodiscard]] Matrix<N> imag_part() const {
        Matrix<N> m;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) m(i, j) = (*this)(i, j).imag();
        return m;
    }

    [[nodiscard]] double trace() const {
        double t = 0.0;
        for (double d : diag_) t += d;
        return t;
    }

private:
    static constexpr std::size_t upper_count = N * (N - 1) / 2;
    static constexpr std::size_t upper_index(std::size_t i, std::size_t j) {
        // i < j
        return i * (2 * N - i - 1) / 2 + (j - i - 1);
    }

    std::array<double, N> diag_{};
    std::array<complex, upper_count> upper_{};
};

using Herm2 = HermMat<2>;
using Herm3 = HermMat<3>;

template <std::size_t N>
double max_abs_diff(const HermMat<N>& a, const HermMat<N>& b) {
    return (a.dense() - b.dense()).max_abs();
}

template <std::size_t N>
HermMat<N> inverse(const HermMat<N>& m) {
    return HermMat<N>::from_dense(inverse(m.dense()), 1e-9);
}

// 3-vector helpers

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    if (n == 0.0) fail(ErrorCode::invalid_argument, "cannot normalise the zero vector");
    return (1.0 / n) * a;
}

} // namespace qest
