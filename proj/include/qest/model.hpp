#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "qest/errors.hpp"
#include "qest/matrix.hpp"

namespace qest {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Smallest |theta1| accepted; keeps g^33 = 1/theta1^2 finite.
inline constexpr double min_abs_theta1 = 1e-9;

inline double wrap_phase(double phi) {
    double w = std::fmod(phi, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

/// Minimal signed angular distance a - b, in (-pi, pi].
inline double phase_difference(double a, double b) {
    double d = std::remainder(a - b, two_pi);
    if (d <= -std::numbers::pi) d += two_pi;
    return d;
}

/**
 * Model point (theta1, theta2, theta3).
 *
 * theta1 is the off-diagonal amplitude, theta2 the population imbalance and
 * theta3 the phase. Valid points satisfy theta1^2 + theta2^2 < 1 and
 * |theta1| > 1e-9; the phase is stored reduced to [0, 2 pi).
 */
class ThetaParams {
public:
    ThetaParams(double theta1, double theta2, double theta3) {
        if (!std::isfinite(theta1) || !std::isfinite(theta2) || !std::isfinite(theta3)) {
            fail(ErrorCode::invalid_argument, "theta components must be finite");
        }
        if (!(std::abs(theta1) > min_abs_theta1)) {
            fail(ErrorCode::invalid_argument,
                 "theta1 must be nonzero (|theta1| > 1e-9): the model excludes theta1 = 0");
        }
        if (!(theta1 * theta1 + theta2 * theta2 < 1.0)) {
            fail(ErrorCode::invalid_argument,
                 "theta must satisfy theta1^2 + theta2^2 < 1 (full-rank state)");
        }
        theta1_ = theta1;
        theta2_ = theta2;
        theta3_ = wrap_phase(theta3);
    }

    /// Parses "t1,t2,t3" (decimal, radians).
    static ThetaParams parse(std::string_view text) {
        std::array<double, 3> v{};
        std::size_t idx = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = text.find(',', pos);
            std::string_view field = text.substr(pos, comma == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : comma - pos);
            while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
            if (idx >= 3) {
                fail(ErrorCode::invalid_argument, "theta expects exactly 3 comma-separated values");
            }
            double value = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
            if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || field.empty()) {
                fail(ErrorCode::invalid_argument,
                     "theta field " + std::to_string(idx + 1) + " is not a number: '" +
                         std::string(field) + "'");
            }
            v[idx++] = value;
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (idx != 3) {
            fail(ErrorCode::invalid_argument, "theta expects exactly 3 comma-separated values");
        }
        return {v[0], v[1], v[2]};
    }

    [[nodiscard]] double theta1() const noexcept { return theta1_; }
    [[nodiscard]] double theta2() const noexcept { return theta2_; }
    [[nodiscard]] double theta3() const noexcept { return theta3_; }

    [[nodiscard]] std::array<double, 2> interest() const noexcept { return {theta1_, theta2_}; }
    [[nodiscard]] std::array<double, 3> all() const noexcept { return {theta1_, theta2_, theta3_}; }

    [[nodiscard]] ThetaParams with_phase(double theta3) const { return {theta1_, theta2_, theta3}; }

    /// theta1^2 + theta2^2, the squared Bloch length.
    [[nodiscard]] double radius_squared() const noexcept {
        return theta1_ * theta1_ + theta2_ * theta2_;
    }

private:
    double theta1_ = 0.5;
    double theta2_ = 0.0;
    double theta3_ = 0.0;
};

struct BlochVector {
    Vec3 s{};

    [[nodiscard]] double norm_squared() const { return dot(s, s); }
};

/// Hermitian operator written as c0 * sigma0 + c . sigma.
struct PauliOperator {
    double c0 = 0.0;
    Vec3 c{};

    /// Tr(rho X) for rho = (sigma0 + s . sigma) / 2.
    [[nodiscard]] double expectation(const BlochVector& b) const { return c0 + dot(b.s, c); }

    [[nodiscard]] Herm2 matrix() const {
        Herm2 h;
        h.set_diagonal(0, c0 + c[2]);
        h.set_diagonal(1, c0 - c[2]);
        h.set(0, 1, complex{c[0], -c[1]});
        return h;
    }

    static PauliOperator from_matrix(const Herm2& h) {
        const complex off = h(0, 1);
        return {0.5 * (h(0, 0).real() + h(1, 1).real()),
                Vec3{off.real(), -off.imag(), 0.5 * (h(0, 0).real() - h(1, 1).real())}};
    }
};

/// A unit-trace positive 2x2 Hermitian matrix.
class DensityMatrix {
public:
    explicit DensityMatrix(const Herm2& m) : m_(m) {
        if (std::abs(m.trace() - 1.0) > 1e-12) {
            fail(ErrorCode::invalid_argument, "density matrix trace differs from 1");
        }
        const double det = m(0, 0).real() * m(1, 1).real() - std::norm(m(0, 1));
        if (det < -1e-12 || m(0, 0).real() < -1e-12 || m(1, 1).real() < -1e-12) {
            fail(ErrorCode::not_psd, "density matrix is not positive semidefinite");
        }
    }

    [[nodiscard]] const Herm2& matrix() const noexcept { return m_; }
    [[nodiscard]] complex operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

    [[nodiscard]] BlochVector bloch() const {
        const PauliOperator p = PauliOperator::from_matrix(m_);
        return {2.0 * p.c};
    }

    [[nodiscard]] std::array<double, 2> eigenvalues() const {
        const double r = 0.5 * norm(bloch().s);
        return {0.5 + r, 0.5 - r};
    }

private:
    Herm2 m_;
};

inline BlochVector bloch_from_theta(const ThetaParams& t) {
    return {Vec3{t.theta1() * std::cos(t.theta3()), t.theta1() * std::sin(t.theta3()), t.theta2()}};
}

/// (sigma0 + s . sigma) / 2.
inline Herm2 state_from_bloch(const BlochVector& b) {
    return PauliOperator{0.5, 0.5 * b.s}.matrix();
}

/// rho_theta = 1/2 [[1 + theta2, theta1 e^{-i theta3}], [theta1 e^{i theta3}, 1 - theta2]].
inline DensityMatrix state_from_theta(const ThetaParams& t) {
    Herm2 h;
    h.set_diagonal(0, 0.5 * (1.0 + t.theta2()));
    h.set_diagonal(1, 0.5 * (1.0 - t.theta2()));
    h.set(0, 1, 0.5 * t.theta1() * std::polar(1.0, -t.theta3()));
    return DensityMatrix(h);
}

/// Partial derivatives of the Bloch vector with respect to the first K parameters.
/// K = 2 treats the phase as known; K = 3 includes d/dtheta3.
template <std::size_t K>
std::array<Vec3, K> bloch_derivatives(const ThetaParams& t) {
    static_assert(K == 2 || K == 3, "the model has 2 or 3 parameters");
    const double c = std::cos(t.theta3());
    const double s = std::sin(t.theta3());
    std::array<Vec3, K> d{};
    d[0] = {c, s, 0.0};
    d[1] = {0.0, 0.0, 1.0};
    if constexpr (K == 3) {
        d[2] = {-t.theta1() * s, t.theta1() * c, 0.0};
    }
    return d;
}

/// Runtime-k variant for callers that dispatch on a parsed k.
inline std::vector<Vec3> bloch_derivatives(const ThetaParams& t, int k) {
    if (k == 2) {
        const auto d = bloch_derivatives<2>(t);
        return {d.begin(), d.end()};
    }
    if (k == 3) {
        const auto d = bloch_derivatives<3>(t);
        return {d.begin(), d.end()};
    }
    fail(ErrorCode::invalid_argument, "k must be 2 or 3");
}

/// d rho / d theta_i differentiated from the matrix form directly.
inline Herm2 density_derivative(const ThetaParams& t, std::size_t i) {
    Herm2 h;
    switch (i) {
    case 0:
        h.set(0, 1, 0.5 * std::polar(1.0, -t.theta3()));
        break;
    case 1:
        h.set_diagonal(0, 0.5);
        h.set_diagonal(1, -0.5);
        break;
    case 2:
        h.set(0, 1, complex{0.0, -0.5 * t.theta1()} * std::polar(1.0, -t.theta3()));
        break;
    default:
        fail(ErrorCode::invalid_argument, "parameter index out of range");
    }
    return h;
}

} // namespace qest
