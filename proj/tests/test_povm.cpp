#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace qest;
using Catch::Approx;

namespace {

// G J^{-1} G = sqrt(G) sqrt(F) sqrt(G) / Tr sqrt(F) with F = sqrt(G^{-1}) W sqrt(G^{-1}),
// written as J = target after inversion
double optimality_residual(const ThetaParams& t, const Sym2& w, const Povm& povm) {
    const Sym2 j = classical_fisher<2>(t, povm).matrix;
    return max_abs_diff(j, optimal_fisher_target(t, w)) / std::max(1.0, j.max_abs());
}

} // namespace

TEST_CASE("Povm validation", "[povm]") {
    CHECK_NOTHROW(Povm::projective({1.0, 0.0, 0.0}));
    CHECK_THROWS_AS(Povm(std::vector<PovmElement>{{"a", {0.5, {}}}}), Error);
    CHECK_THROWS_AS(Povm(std::vector<PovmElement>{{"a", {0.5, {}}}, {"a", {0.5, {}}}}), Error);
    CHECK_THROWS_AS(Povm(std::vector<PovmElement>{{"a", {0.5, {0.0, 0.0, 0.7}}}, {"b", {0.5, {0.0, 0.0, -0.7}}}}),
                    Error);
    CHECK_THROWS_AS(Povm(std::vector<PovmElement>{}), Error);

    const Povm p = Povm::projective({0.0, 0.0, 2.0}, "z");
    CHECK(p.size() == 2);
    CHECK(p[0].label == "z+");
    CHECK(p.index_of("z-") == 1);
    CHECK_THROWS_AS(p.index_of("x"), Error);
    const auto probs = p.probabilities(ThetaParams{0.5, 0.5, 0.0});
    CHECK(probs[0] == Approx(0.75));
    CHECK(probs[1] == Approx(0.25));

    const auto from = Povm::from_matrices({{"a", p[0].matrix()}, {"b", p[1].matrix()}});
    CHECK(from.completeness_residual() < 1e-15);
}

TEST_CASE("optimal POVM at the identity-weight example", "[povm]") {
    const ThetaParams t{0.5, 0.5, 0.0};
    const auto opt = build_optimal_povm(t, Sym2::identity());
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(norm(opt.plan.directions[0] - Vec3{r, 0.0, r}) < 1e-12);
    CHECK(norm(opt.plan.directions[1] - Vec3{r, 0.0, -r}) < 1e-12);
    CHECK(opt.plan.probabilities[0] == Approx(std::sqrt(0.5) / (1.0 + std::sqrt(0.5))).epsilon(1e-12));
    CHECK(opt.plan.probabilities[1] == Approx(1.0 / (1.0 + std::sqrt(0.5))).epsilon(1e-12));
    CHECK(std::abs(dot(opt.plan.directions[0], opt.plan.directions[1])) < 1e-12);
    CHECK_FALSE(opt.plan.degenerate);
    CHECK(opt.povm.size() == 4);
    CHECK(opt.povm[0].label == "1+");
    CHECK(opt.povm[3].label == "2-");

    const auto p = opt.povm.probabilities(t);
    CHECK(p[2] / opt.plan.probabilities[1] == Approx(0.5).epsilon(1e-12));
    CHECK(p[3] / opt.plan.probabilities[1] == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("optimal POVM attains the Nagaoka bound", "[povm]") {
    const ThetaParams t{0.6, 0.0, 0.3};
    const auto opt = build_optimal_povm(t, Sym2::identity());
    const Sym2 jinv = inverse(classical_fisher<2>(t, opt.povm).matrix);
    CHECK(jinv(0, 0) == Approx(1.44).epsilon(1e-12));
    CHECK(jinv(1, 1) == Approx(1.8).epsilon(1e-12));
    CHECK(jinv(0, 1) == Approx(0.0).margin(1e-12));
    CHECK(opt.plan.probabilities[0] == Approx(4.0 / 9.0).epsilon(1e-12));
    CHECK(opt.plan.probabilities[1] == Approx(5.0 / 9.0).epsilon(1e-12));
    CHECK(jinv.trace() == Approx(nagaoka_bound(t, Sym2::identity())).epsilon(1e-12));
}

TEST_CASE("optimality condition on random inputs", "[povm][property]") {
    std::mt19937_64 rng(55);
    double worst_cond = 0.0;
    double worst_attain = 0.0;
    double worst_valid = 0.0;
    double worst_probs = 0.0;
    for (int i = 0; i < 200; ++i) {
        const ThetaParams t = testing::random_theta(rng);
        const Sym2 w = testing::random_pd<2>(rng);
        const auto opt = build_optimal_povm(t, w);
        worst_cond = std::max(worst_cond, optimality_residual(t, w, opt.povm));
        const Sym2 jinv = inverse(classical_fisher<2>(t, opt.povm).matrix);
        const double nb = nagaoka_bound(t, w);
        worst_attain = std::max(worst_attain, std::abs(trace_product(w, jinv) - nb) / nb);
        worst_valid = std::max({worst_valid, opt.povm.completeness_residual(), -opt.povm.min_element_eigenvalue()});
        const double r0 = std::sqrt(opt.plan.lambdas[0]);
        const double r1 = std::sqrt(opt.plan.lambdas[1]);
        worst_probs = std::max(worst_probs, std::abs(opt.plan.probabilities[0] - r0 / (r0 + r1)));
    }
    CHECK(worst_cond < 1e-9);
    CHECK(worst_attain < 1e-9);
    CHECK(worst_valid < 1e-12);
    CHECK(worst_probs < 1e-15);
}

TEST_CASE("degenerate weighted information", "[povm]") {
    const ThetaParams t{0.5, 0.5, 0.7};
    const Sym2 w = sld_fisher<2>(t).matrix * 2.0;
    const auto opt = build_optimal_povm(t, w);
    CHECK(opt.plan.degenerate);
    CHECK(opt.plan.probabilities[0] == Approx(0.5));
    CHECK(opt.plan.probabilities[1] == Approx(0.5));
    CHECK(optimality_residual(t, w, opt.povm) < 1e-9);
    CHECK(trace_product(w, inverse(classical_fisher<2>(t, opt.povm).matrix)) ==
          Approx(nagaoka_bound(t, w)).epsilon(1e-9));
}

TEST_CASE("optimal estimator", "[povm]") {
    const ThetaParams t{0.5, 0.5, 0.0};
    const auto opt = build_optimal_povm(t, Sym2::identity());
    const auto est = build_optimal_estimator(t, Sym2::identity(), opt.povm);
    CHECK(verify_locally_unbiased(est).pass(1e-12));

    // arm-2 outcomes sit at theta +- (1/(p2 |s|)) (-theta2, theta1)
    const double p2 = opt.plan.probabilities[1];
    const double s = std::sqrt(t.radius_squared());
    const auto plus = est.estimates.at("2+");
    const auto minus = est.estimates.at("2-");
    const double k = 1.0 / (p2 * s);
    const bool forward = std::abs(plus[0] - (0.5 - 0.5 * k)) < 1e-12;
    const double sign = forward ? 1.0 : -1.0;
    CHECK(plus[0] == Approx(0.5 - sign * 0.5 * k).epsilon(1e-12));
    CHECK(plus[1] == Approx(0.5 + sign * 0.5 * k).epsilon(1e-12));
    CHECK(minus[0] == Approx(0.5 + sign * 0.5 * k).epsilon(1e-12));
    CHECK(minus[1] == Approx(0.5 - sign * 0.5 * k).epsilon(1e-12));

    const Sym2 v = exact_mse(est, t);
    CHECK(max_abs_diff(v, inverse(classical_fisher<2>(t, opt.povm).matrix)) < 1e-12);

    SECTION("zero estimates") {
        QuantumEstimator zero = est;
        for (auto& [label, e] : zero.estimates) e = {0.0, 0.0};
        const auto r = verify_locally_unbiased(zero);
        CHECK(r.bias_residual == Approx(std::hypot(0.5, 0.5)));
        CHECK(r.derivative_residual == Approx(1.0));
    }
    SECTION("evaluated away from its anchor") {
        const ThetaParams other{0.4, 0.3, 0.2};
        QuantumEstimator moved = est;
        moved.anchor = other;
        const auto r = verify_locally_unbiased(moved);
        CHECK_FALSE(r.pass());
    }
    SECTION("random points") {
        std::mt19937_64 rng(3);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const ThetaParams p = testing::random_theta(rng);
            const Sym2 w = testing::random_pd<2>(rng);
            const auto o = build_optimal_povm(p, w);
            const auto r = verify_locally_unbiased(build_optimal_estimator(p, w, o.povm));
            worst = std::max({worst, r.bias_residual, r.derivative_residual});
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("phase-perturbed POVM", "[povm]") {
    const ThetaParams t{0.6, 0.0, 0.3};
    const Sym2 w = Sym2::identity();
    const Povm same = build_phase_perturbed_povm(t, t.theta3(), w);
    const Povm base = build_optimal_povm(t, w).povm;
    for (std::size_t x = 0; x < base.size(); ++x) {
        CHECK(same[x].label == base[x].label);
        CHECK(same[x].op.c0 == base[x].op.c0);
        CHECK(norm(same[x].op.c - base[x].op.c) == 0.0);
    }

    double previous = 0.0;
    for (double d : {0.1, 0.05, 0.025}) {
        const Povm p = build_phase_perturbed_povm(t, t.theta3() + d, w);
        const Sym2 j = classical_fisher<2>(t, p).matrix;
        CHECK(max_abs_diff(j, phase_perturbed_prediction(t, t.theta3() + d, w, true)) < 1e-9);
        const double loss = trace_product(w, inverse(j)) - 3.24;
        CHECK(loss > 0.0);
        if (previous > 0.0) CHECK(previous / loss > 3.0);
        previous = loss;
    }
}
