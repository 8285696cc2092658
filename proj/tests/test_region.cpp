#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace qest;
using Catch::Approx;

namespace {

Sym3 with_phase(const Sym2& v2, double v33) {
    Sym3 v;
    v(0, 0) = v2(0, 0);
    v(0, 1) = v2(0, 1);
    v(1, 1) = v2(1, 1);
    v(2, 2) = v33;
    return v;
}

// candidates around the region boundary: G^{-1} + random PSD of varying size
Sym2 candidate(std::mt19937_64& rng, const ThetaParams& t) {
    std::uniform_real_distribution<double> scale(0.0, 3.0);
    return sld_fisher_inverse<2>(t) + testing::random_pd<2>(rng, 0.0) * scale(rng);
}

} // namespace

TEST_CASE("region D", "[region]") {
    const ThetaParams t{0.5, 0.5, 0.0};
    const Sym2 ginv = sld_fisher_inverse<2>(t);

    const auto twice = in_region_D(ginv * 2.0, t);
    CHECK(twice.member);
    CHECK(twice.boundary);
    CHECK(twice.margin("det_slack") == Approx(0.0).margin(1e-12));

    const auto sld = in_region_D(ginv, t);
    CHECK_FALSE(sld.member);
    CHECK_FALSE(sld.boundary);

    const ThetaParams u{0.6, 0.0, 0.3};
    const auto opt = build_optimal_povm(u, Sym2::identity());
    const Sym2 vopt = inverse(classical_fisher<2>(u, opt.povm).matrix);
    const auto at_opt = in_region_D(vopt, u);
    CHECK(at_opt.member);
    CHECK(std::abs(at_opt.margin("det_slack")) < 1e-9);

    CHECK_THROWS_AS(at_opt.margin("nope"), Error);
}

TEST_CASE("region D_GM", "[region]") {
    const ThetaParams t{0.5, 0.5, 0.0};
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    const auto twice = in_region_D_GM(ginv * 2.0, t);
    CHECK(twice.member);
    CHECK(twice.boundary);
    const auto ten = in_region_D_GM(ginv * 10.0, t);
    CHECK(ten.member);
    CHECK_FALSE(ten.boundary);
    CHECK(ten.margin("trace_slack") == Approx(determinant(ginv * 10.0) * 0.8));
}

TEST_CASE("D and D_GM agree on random candidates", "[region][property]") {
    std::mt19937_64 rng(6);
    int disagreements = 0;
    int sign_mismatch = 0;
    int members = 0;
    for (int i = 0; i < 1000; ++i) {
        const ThetaParams t = testing::random_theta(rng);
        const Sym2 v = candidate(rng, t);
        const auto a = in_region_D(v, t);
        const auto b = in_region_D_GM(v, t);
        if (a.member != b.member) ++disagreements;
        members += a.member ? 1 : 0;
        const double da = a.margin("det_slack");
        const double db = b.margin("trace_slack");
        if (std::abs(da) > 1e-9 && std::abs(db) > 1e-9 && (da > 0) != (db > 0)) ++sign_mismatch;
    }
    CHECK(disagreements == 0);
    CHECK(sign_mismatch == 0);
    CHECK(members > 100);
    CHECK(members < 900);
}

TEST_CASE("trace-determinant equivalence", "[region]") {
    const auto member = trace_det_equivalence_check(1.0, Sym2::identity() * 2.0, 10000, 1);
    CHECK(member.d2_member);
    CHECK(member.violations == 0);
    CHECK(member.consistent);

    const auto outside = trace_det_equivalence_check(1.0, Sym2::diagonal({1.0, 0.5}), 100, 1);
    CHECK_FALSE(outside.d2_member);
    CHECK(outside.violations >= 1);
    CHECK(outside.consistent);
    CHECK(outside.worst_slack <= 2.0 - 2.0 * std::sqrt(2.0) + 1e-12);

    const auto small_c = trace_det_equivalence_check(1e-6, Sym2::diagonal({0.01, 0.02}), 1000, 3);
    CHECK(small_c.d2_member);
    CHECK(small_c.consistent);

    const auto indefinite = trace_det_equivalence_check(1.0, Sym2::diagonal({2.0, -1.0}), 10, 3);
    CHECK_FALSE(indefinite.d2_member);
    CHECK(indefinite.consistent);

    CHECK_THROWS_AS(trace_det_equivalence_check(0.0, Sym2::identity(), 10, 1), Error);

    std::mt19937_64 rng(21);
    int inconsistent = 0;
    for (int i = 0; i < 200; ++i) {
        const Sym2 v = testing::random_pd<2>(rng, 0.01);
        if (!trace_det_equivalence_check(0.5, v, 200, static_cast<std::uint64_t>(i)).consistent) ++inconsistent;
    }
    CHECK(inconsistent == 0);
}

TEST_CASE("region D(3)", "[region]") {
    const ThetaParams t{0.5, 0.5, 1.0};
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    const double g33 = phase_sld_variance(t);

    const auto boundary = in_region_D3(with_phase(ginv * 4.0, 2.0 * g33), t);
    CHECK(boundary.member);
    CHECK(boundary.boundary);

    CHECK_FALSE(in_region_D3(with_phase(ginv * 100.0, g33), t).member);
    CHECK_FALSE(in_region_D3(with_phase(ginv * 100.0, 0.5 * g33), t).member);

    // members of D are not members of D(3) at the same V_2 once gamma > 1
    const Sym2 d_boundary = ginv * 2.0;
    CHECK(in_region_D(d_boundary, t).member);
    CHECK_FALSE(in_region_D3(with_phase(d_boundary, 10.0 * g33), t).member);
}

TEST_CASE("region D_SLD(3) and separation", "[region]") {
    const ThetaParams t{0.5, 0.5, 1.0};
    const Sym3 g3inv = sld_fisher_inverse<3>(t);
    const auto sld = in_region_SLD3(g3inv, t);
    CHECK(sld.member);
    CHECK(sld.boundary);
    CHECK_FALSE(in_region_D3(g3inv, t).member);

    CHECK(in_region_SLD3(g3inv * 10.0, t).member);
    CHECK(in_region_D3(g3inv * 10.0, t).member);
}

TEST_CASE("Holevo regions", "[region]") {
    const ThetaParams t{0.5, 0.5, 1.0};
    const Sym2 ginv = sld_fisher_inverse<2>(t);
    const auto h2 = in_region_H(ginv, t);
    CHECK(h2.member);
    CHECK(h2.boundary);

    const Sym2 thr = holevo_threshold(t, 2.0);
    CHECK(thr(0, 0) == Approx(1.0));
    CHECK(thr(0, 1) == Approx(-0.5));
    CHECK(thr(1, 1) == Approx(1.0));

    const double g33 = phase_sld_variance(t);
    // thr - G^{-1} is rank one, so thr itself fails V_2 > G^{-1}; lift it along (1, 1)
    CHECK_FALSE(in_region_H(with_phase(thr, 2.0 * g33), t).member);
    const Sym2 lifted = thr + Sym2{{0.1, 0.1}, {0.1, 0.1}};
    const auto edge = in_region_H(with_phase(lifted, 2.0 * g33), t);
    CHECK(edge.member);
    CHECK(edge.boundary);
    CHECK(max_abs_diff(holevo_threshold(t, gamma_factor(1e12 * g33, g33)), ginv) < 1e-10);
    CHECK_FALSE(in_region_H(with_phase(ginv * 5.0, g33), t).member);
}

TEST_CASE("region nesting on random candidates", "[region][property]") {
    std::mt19937_64 rng(15);
    int d3_members = 0;
    int not_in_sld3 = 0;
    int not_in_h3 = 0;
    int monotone_fail = 0;
    for (int i = 0; i < 1000; ++i) {
        const ThetaParams t = testing::random_theta(rng);
        std::uniform_real_distribution<double> ph(1.0, 6.0);
        const double v33 = phase_sld_variance(t) * ph(rng);
        const Sym3 v = with_phase(candidate(rng, t) * 2.0, v33);
        if (!in_region_D3(v, t).member) continue;
        ++d3_members;
        if (!in_region_SLD3(v, t).member) ++not_in_sld3;
        if (!in_region_H(v, t).member) ++not_in_h3;
        Sym3 bigger = v;
        bigger(2, 2) *= 1.5;
        if (!in_region_D3(bigger, t).member) ++monotone_fail;
    }
    CHECK(d3_members > 50);
    CHECK(not_in_sld3 == 0);
    CHECK(not_in_h3 == 0);
    CHECK(monotone_fail == 0);
}
