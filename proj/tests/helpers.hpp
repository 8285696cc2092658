#pragma once

#include <cmath>
#include <random>

#include "qest/qest.hpp"

namespace testing {

inline qest::ThetaParams random_theta(std::mt19937_64& rng, double max_radius = 0.95) {
    std::uniform_real_distribution<double> r(0.05, max_radius);
    std::uniform_real_distribution<double> a(0.0, qest::two_pi);
    std::uniform_real_distribution<double> ph(-10.0, 10.0);
    while (true) {
        const double rad = r(rng);
        const double ang = a(rng);
        const double t1 = rad * std::cos(ang);
        if (std::abs(t1) < 0.05) continue;
        return {t1, rad * std::sin(ang), ph(rng)};
    }
}

template <std::size_t N>
qest::SymMat<N> random_pd(std::mt19937_64& rng, double ridge = 0.05) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    qest::Matrix<N> b;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) b(i, j) = u(rng);
    return qest::SymMat<N>::symmetrize(b.transpose() * b) + qest::SymMat<N>::identity() * ridge;
}

template <std::size_t N>
qest::SymMat<N> random_sym(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    qest::SymMat<N> m;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i; j < N; ++j) m(i, j) = u(rng);
    return m;
}

} // namespace testing
