#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace qest;
using Catch::Approx;

namespace {

const ThetaParams anchor{0.5, 0.5, 1.0};
const BlockWeight unit_block{Sym2::identity(), 1.0};

} // namespace

TEST_CASE("SLD and RLD Cramer-Rao bounds", "[bounds]") {
    CHECK(sld_cr_bound<2>(anchor, Sym2::identity()) == Approx(1.5).epsilon(1e-14));
    CHECK(sld_cr_bound(anchor, Weight3(unit_block)) == Approx(5.5).epsilon(1e-14));
    CHECK(sld_cr_bound<2>(anchor, Sym2::identity() * 3.0) == Approx(4.5));

    CHECK(rld_cr_bound(anchor, Sym2::identity()) == Approx(1.0).epsilon(1e-14));
    CHECK(rld_cr_bound(anchor, Weight3(unit_block)) == Approx(5.5 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(rld_cr_bound(anchor, Weight3(unit_block)) ==
          Approx(holevo_bound_k3(anchor, Weight3(unit_block))).epsilon(1e-12));
}

TEST_CASE("Nagaoka and HGM bounds", "[bounds]") {
    const double expected = 1.5 + 2.0 * std::sqrt(0.5);
    CHECK(nagaoka_bound(anchor, Sym2::identity()) == Approx(expected).epsilon(1e-14));
    CHECK(nagaoka_bound({0.6, 0.0, 0.3}, Sym2::identity()) == Approx(3.24).epsilon(1e-14));

    const auto h = hgm_bound<2>(anchor, Sym2::identity());
    CHECK(h.value == Approx(expected).epsilon(1e-12));
    CHECK(h.lambdas[0] == Approx(1.0));
    CHECK(h.lambdas[1] == Approx(0.5));

    const double block = std::pow(std::sqrt(expected) + 2.0, 2);
    CHECK(hgm_bound_block(anchor, unit_block) == Approx(block).epsilon(1e-12));
    CHECK(hgm_bound(anchor, Weight3(unit_block)).value == Approx(block).epsilon(1e-10));
    CHECK(block == Approx(13.74264069).epsilon(1e-9));

    SECTION("W = G gives k squared") {
        CHECK(hgm_bound<2>(anchor, sld_fisher<2>(anchor).matrix).value == Approx(4.0).epsilon(1e-12));
        CHECK(hgm_bound<3>(anchor, sld_fisher<3>(anchor).matrix).value == Approx(9.0).epsilon(1e-12));
    }
}

TEST_CASE("gamma factor", "[bounds]") {
    CHECK(gamma_factor(2.0, 1.0) == Approx(2.0));
    CHECK(gamma_factor(8.0, 4.0) == Approx(2.0));
    CHECK(gamma_factor(1.001, 1.0) == Approx(1001.0).epsilon(1e-9));
    CHECK(gamma_factor(1e12, 1.0) == Approx(1.0).epsilon(1e-11));
    CHECK(gamma_factor(10.0, 1.0) < gamma_factor(5.0, 1.0));
    CHECK_THROWS_AS(gamma_factor(1.0, 1.0), Error);
    try {
        gamma_factor(0.5, 1.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::infeasible_mse);
    }
}

TEST_CASE("Holevo bound with unknown phase", "[bounds]") {
    CHECK(holevo_bound_k3(anchor, Weight3(unit_block)) == Approx(8.3284271247).epsilon(1e-10));
    CHECK(holevo_bound_k3_block(anchor, unit_block) == Approx(8.3284271247).epsilon(1e-10));
    const ThetaParams t{0.6, 0.0, 0.3};
    CHECK(holevo_bound_k3(t, Weight3(unit_block)) == Approx(1.64 + 1.0 / 0.36 + 2.0 * (5.0 / 3.0) * 0.6).epsilon(1e-12));
}

TEST_CASE("Holevo bound with known phase", "[bounds]") {
    const auto r = holevo_bound_k2(anchor, Sym2::identity());
    CHECK(r.converged);
    CHECK(r.value == Approx(1.5).margin(1e-6));

    SECTION("cotangent SLD vectors give a real Z and the SLD value") {
        const auto x = cotangent_sld_vectors(anchor);
        const auto s = bloch_from_theta(anchor).s;
        CHECK(std::abs(dot(cross(x[0], x[1]), s)) < 1e-14);
        CHECK(holevo_function_k2(anchor, Sym2::identity(), x[0], x[1]) == Approx(1.5).epsilon(1e-12));
        const auto ds = bloch_derivatives<2>(anchor);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                CHECK(dot(x[i], ds[j]) == Approx(i == j ? 1.0 : 0.0).margin(1e-14));
    }
    SECTION("scaling") {
        const auto s = holevo_bound_k2(anchor, Sym2::identity() * 2.5);
        CHECK(s.value == Approx(2.5 * r.value).epsilon(1e-6));
    }
    SECTION("minimiser satisfies the constraints") {
        const auto ds = bloch_derivatives<2>(anchor);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                CHECK(dot(r.x_opt[i], ds[j]) == Approx(i == j ? 1.0 : 0.0).margin(1e-12));
    }
}

TEST_CASE("Nelder-Mead on a smooth bowl", "[bounds]") {
    const auto r = nelder_mead_2d([](double x, double y) { return (x - 1.0) * (x - 1.0) + 3.0 * (y + 2.0) * (y + 2.0); },
                                  {0.0, 0.0}, 0.5);
    CHECK(r.converged);
    CHECK(r.point[0] == Approx(1.0).margin(1e-4));
    CHECK(r.point[1] == Approx(-2.0).margin(1e-4));
}

TEST_CASE("bound identities on random inputs", "[bounds][property]") {
    std::mt19937_64 rng(404);
    double route = 0.0;
    double block_route = 0.0;
    double chain = 0.0;
    double strict = 1e300;
    double rld_eq = 0.0;
    for (int i = 0; i < 500; ++i) {
        const ThetaParams t = testing::random_theta(rng);
        const Sym2 w = testing::random_pd<2>(rng);
        const double n = nagaoka_bound(t, w);
        route = std::max(route, std::abs(n - hgm_bound<2>(t, w).value) / n);

        const double gap = n - sld_cr_bound<2>(t, w);
        const double expected_gap = 2.0 * std::sqrt(determinant(w) * determinant(sld_fisher_inverse<2>(t)));
        strict = std::min(strict, gap);
        route = std::max(route, std::abs(gap - expected_gap) / n);

        std::uniform_real_distribution<double> u(0.1, 3.0);
        const BlockWeight bw{w, u(rng)};
        const double hb = hgm_bound_block(t, bw);
        block_route = std::max(block_route, std::abs(hb - hgm_bound(t, Weight3(bw)).value) / hb);

        const Weight3 full(testing::random_pd<3>(rng));
        const double c_hgm = hgm_bound(t, full).value;
        const double c_h = holevo_bound_k3(t, full);
        const double c_s = sld_cr_bound(t, full);
        const double c_r = rld_cr_bound(t, full);
        chain = std::min({chain, (c_hgm - c_h) / c_hgm, (c_h - c_s) / c_hgm});
        rld_eq = std::max(rld_eq, std::abs(c_h - c_r) / c_h);

        const double hk3b = holevo_bound_k3(t, Weight3(bw));
        rld_eq = std::max(rld_eq, std::abs(hk3b - holevo_bound_k3_block(t, bw)) / hk3b);
    }
    CHECK(route < 1e-10);
    CHECK(block_route < 1e-10);
    CHECK(chain > -1e-9);
    CHECK(strict > 0.0);
    CHECK(rld_eq < 1e-9);
}

TEST_CASE("Holevo known-phase minimisation matches SLD bound on random inputs", "[bounds][property]") {
    std::mt19937_64 rng(909);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const ThetaParams t = testing::random_theta(rng);
        const Sym2 w = testing::random_pd<2>(rng);
        const double expected = sld_cr_bound<2>(t, w);
        worst = std::max(worst, std::abs(holevo_bound_k2(t, w).value - expected));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("bound reports and input validation", "[bounds]") {
    const auto r2 = bound_report(anchor, Sym2::identity());
    CHECK(r2.k == 2);
    CHECK(r2.sld_cr == Approx(1.5));
    CHECK(r2.rld_cr == Approx(1.0));
    CHECK(r2.nagaoka_hgm == Approx(2.9142135624));
    CHECK(r2.holevo == Approx(1.5).margin(1e-6));

    const auto r3 = bound_report(anchor, Weight3(unit_block));
    CHECK(r3.k == 3);
    CHECK(r3.sld_cr == Approx(5.5));
    CHECK(r3.holevo == Approx(8.3284271247));
    CHECK(r3.nagaoka_hgm == Approx(13.7426406871));

    CHECK_THROWS_AS(bound_report(anchor, Sym2::diagonal({1.0, -1.0})), Error);
    CHECK_THROWS_AS(Weight3(Sym3::diagonal({1.0, 1.0, 0.0})), Error);
    CHECK_THROWS_AS(Weight3(BlockWeight{Sym2::identity(), -1.0}), Error);
}
