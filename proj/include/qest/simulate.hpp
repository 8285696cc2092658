#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qest/bounds.hpp"
#include "qest/errors.hpp"
#include "qest/fisher.hpp"
#include "qest/matrix.hpp"
#include "qest/model.hpp"
#include "qest/optimal_povm.hpp"
#include "qest/povm.hpp"

namespace qest {

enum class Strategy { single_copy_optimal, two_step, adaptive };

inline std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::single_copy_optimal: return "single-copy-optimal";
    case Strategy::two_step: return "two-step";
    case Strategy::adaptive: return "adaptive";
    }
    return "unknown";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "single-copy-optimal" || s == "single") return Strategy::single_copy_optimal;
    if (s == "two-step") return Strategy::two_step;
    if (s == "adaptive") return Strategy::adaptive;
    fail(ErrorCode::invalid_argument,
         "unknown strategy '" + s + "' (expected single-copy-optimal, two-step or adaptive)");
}

struct SimConfig {
    ThetaParams theta_true{0.6, 0.0, 0.3};
    Sym2 weight = Sym2::identity();
    Strategy strategy = Strategy::single_copy_optimal;
    long long n = 1000;
    long long trials = 1000;
    std::uint64_t seed = 1;
    /// Phase copies m = floor(n^exponent) (two-step) or the cumulative
    /// phase share consumed^exponent (adaptive). Unset means 2/3 for
    /// two-step and 0.7 for adaptive.
    std::optional<double> phase_fraction_exponent;
    /// Two-step: coarse sigma1/sigma2 stage uses ceil(m^coarse_exponent) of the m copies.
    double coarse_exponent = 0.75;
    /// Two-step: divide theta1_hat by exp(-v/2), v the predicted phase variance.
    bool phase_bias_correction = true;
    long long batch_size = 100;
    int max_newton_steps = 20;
    /// Worker threads; 0 picks hardware concurrency. Results do not depend on it.
    unsigned threads = 0;
};

template <std::size_t K>
struct MseSummary {
    SymMat<K> v;
    double weighted = 0.0;
    double stderr_weighted = 0.0;
};

struct SimResult {
    Strategy strategy = Strategy::single_copy_optimal;
    long long n = 0;
    long long trials = 0;
    /// MSE matrix of the (theta1, theta2) estimates.
    Sym2 empirical_mse;
    double weighted_mse = 0.0;
    double n_times_weighted_mse = 0.0;
    /// Standard error of n_times_weighted_mse (trial-level jackknife).
    double stderr = 0.0;
    /// n * mean squared phase error (wrapped), when the strategy estimates the phase.
    std::optional<double> n_times_phase_mse;
    std::optional<double> gamma;
    /// Copies used for the phase in each trial (two-step) and m * phase MSE.
    long long phase_copies = 0;
    std::optional<double> phase_mse_times_m;
    long long flagged_trials = 0;
    std::vector<std::string> warnings;
};

inline double phase_exponent(const SimConfig& cfg) {
    if (cfg.phase_fraction_exponent) return *cfg.phase_fraction_exponent;
    return cfg.strategy == Strategy::adaptive ? 0.7 : 2.0 / 3.0;
}

// ---------------------------------------------------------------------------

/// Multinomial counts by sequential binomial draws.
template <typename Rng>
std::vector<long long> sample_counts(const std::vector<double>& probabilities, long long n, Rng& rng) {
    if (n < 0) fail(ErrorCode::invalid_argument, "sample size must be non-negative");
    std::vector<double> p(probabilities);
    double total = 0.0;
    for (double& x : p) {
        if (!std::isfinite(x) || x < -1e-12) {
            fail(ErrorCode::invalid_povm, "outcome probability is negative or non-finite");
        }
        x = std::max(x, 0.0);
        total += x;
    }
    std::vector<long long> counts(p.size(), 0);
    long long left = n;
    double mass = total;
    for (std::size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
        if (mass <= 0.0) break;
        const double q = std::clamp(p[i] / mass, 0.0, 1.0);
        std::binomial_distribution<long long> bin(left, q);
        counts[i] = bin(rng);
        left -= counts[i];
        mass -= p[i];
    }
    if (!p.empty()) counts.back() += left;
    return counts;
}

/// Outcome counts of n copies of rho_t measured with `povm`, in element order.
template <typename Rng>
std::vector<long long> sample_outcomes(const ThetaParams& t, const Povm& povm, long long n, Rng& rng) {
    return sample_counts(povm.probabilities(t), n, rng);
}

/// Independent generator for one trial, derived from (seed, trial).
inline std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

/**
 * MSE matrix v_ij = mean (x_i - truth_i)(x_j - truth_j) over trials, with a
 * leave-one-out jackknife standard error for Tr(W V). Component
 * `circular` (if any) is compared modulo 2 pi by minimal angle.
 */
template <std::size_t K>
MseSummary<K> mse_from_trials(const std::vector<std::array<double, K>>& estimates,
                              const std::array<double, K>& truth, const SymMat<K>& w,
                              std::optional<std::size_t> circular = std::nullopt) {
    const std::size_t t = estimates.size();
    if (t < 2) fail(ErrorCode::invalid_argument, "mse_from_trials needs at least 2 trials");
    MseSummary<K> out;
    std::vector<double> loss(t, 0.0);
    for (std::size_t r = 0; r < t; ++r) {
        std::array<double, K> d{};
        for (std::size_t i = 0; i < K; ++i) {
            d[i] = (circular && *circular == i) ? phase_difference(estimates[r][i], truth[i])
                                                : estimates[r][i] - truth[i];
        }
        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t j = i; j < K; ++j) out.v(i, j) += d[i] * d[j];
            for (std::size_t j = 0; j < K; ++j) loss[r] += w(i, j) * d[i] * d[j];
        }
    }
    out.v *= 1.0 / static_cast<double>(t);
    double sum = 0.0;
    for (double l : loss) sum += l;
    out.weighted = sum / static_cast<double>(t);
    double acc = 0.0;
    for (double l : loss) {
        const double loo = (sum - l) / static_cast<double>(t - 1);
        acc += (loo - out.weighted) * (loo - out.weighted);
    }
    out.stderr_weighted = std::sqrt(acc * static_cast<double>(t - 1) / static_cast<double>(t));
    return out;
}

namespace detail {

/// Runs body(trial) for every trial on a fixed partition of worker threads.
template <typename Body>
void for_each_trial(long long trials, unsigned threads, Body body) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<long long>(workers, trials));
    if (workers <= 1) {
        for (long long r = 0; r < trials; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (long long r = w; r < trials; r += workers) body(r);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline void validate(const SimConfig& cfg) {
    if (cfg.n < 4) fail(ErrorCode::invalid_argument, "n must be at least 4");
    if (cfg.trials < 1) fail(ErrorCode::invalid_argument, "trials must be at least 1");
    require_positive_definite(cfg.weight);
    const double e = phase_exponent(cfg);
    if (!(e > 0.0 && e < 1.0)) {
        fail(ErrorCode::invalid_argument, "phase fraction exponent must lie in (0, 1)");
    }
}

/// Mean of estimator values over the observed counts.
inline std::array<double, 2> average_estimate(const QuantumEstimator& est,
                                              const std::vector<long long>& counts) {
    std::array<double, 2> acc{0.0, 0.0};
    long long total = 0;
    for (std::size_t x = 0; x < counts.size(); ++x) {
        if (counts[x] == 0) continue;
        const auto& e = est.estimates.at(est.povm[x].label);
        acc[0] += static_cast<double>(counts[x]) * e[0];
        acc[1] += static_cast<double>(counts[x]) * e[1];
        total += counts[x];
    }
    return {acc[0] / static_cast<double>(total), acc[1] / static_cast<double>(total)};
}

inline SimResult summarise(const SimConfig& cfg, const std::vector<std::array<double, 2>>& est) {
    SimResult r;
    r.strategy = cfg.strategy;
    r.n = cfg.n;
    r.trials = cfg.trials;
    const auto& t = cfg.theta_true;
    if (est.size() >= 2) {
        const auto m = mse_from_trials<2>(est, t.interest(), cfg.weight);
        r.empirical_mse = m.v;
        r.weighted_mse = m.weighted;
        r.stderr = static_cast<double>(cfg.n) * m.stderr_weighted;
    } else {
        const double d0 = est[0][0] - t.theta1();
        const double d1 = est[0][1] - t.theta2();
        r.empirical_mse(0, 0) = d0 * d0;
        r.empirical_mse(0, 1) = d0 * d1;
        r.empirical_mse(1, 1) = d1 * d1;
        r.weighted_mse = trace_product(cfg.weight, r.empirical_mse);
    }
    r.n_times_weighted_mse = static_cast<double>(cfg.n) * r.weighted_mse;
    return r;
}

inline double mean_square_phase_error(const std::vector<double>& est, double truth) {
    double acc = 0.0;
    for (double e : est) {
        const double d = phase_difference(e, truth);
        acc += d * d;
    }
    return acc / static_cast<double>(est.size());
}

inline void attach_phase_diagnostics(SimResult& r, const SimConfig& cfg,
                                     const std::vector<double>& phase_est) {
    const double mse3 = mean_square_phase_error(phase_est, cfg.theta_true.theta3());
    r.n_times_phase_mse = static_cast<double>(cfg.n) * mse3;
    const double g33 = phase_sld_variance(cfg.theta_true);
    if (*r.n_times_phase_mse > g33) r.gamma = gamma_factor(*r.n_times_phase_mse, g33);
    if (r.phase_copies > 0) r.phase_mse_times_m = static_cast<double>(r.phase_copies) * mse3;
}

} // namespace detail

/// Known phase: every copy is measured with the optimal POVM at the true
/// point and the locally unbiased estimates are averaged.
inline SimResult run_single_copy_optimal(const SimConfig& cfg) {
    detail::validate(cfg);
    const ThetaParams& t = cfg.theta_true;
    const OptimalPovm opt = build_optimal_povm(t, cfg.weight);
    const QuantumEstimator est = build_optimal_estimator(t, opt.povm);
    const std::vector<double> probs = opt.povm.probabilities(t);
    std::vector<std::array<double, 2>> estimates(static_cast<std::size_t>(cfg.trials));
    detail::for_each_trial(cfg.trials, cfg.threads, [&](long long r) {
        auto rng = trial_stream(cfg.seed, static_cast<std::uint64_t>(r));
        estimates[static_cast<std::size_t>(r)] =
            detail::average_estimate(est, sample_counts(probs, cfg.n, rng));
    });
    return detail::summarise(cfg, estimates);
}

/// Split of n copies between the phase stages and the interest stage.
struct TwoStepSplit {
    long long phase = 0;
    long long coarse = 0;
    long long refine = 0;
    long long interest = 0;
};

inline TwoStepSplit two_step_split(const SimConfig& cfg) {
    TwoStepSplit s;
    s.phase = static_cast<long long>(std::floor(std::pow(static_cast<double>(cfg.n),
                                                         phase_exponent(cfg)) +
                                                1e-9));
    if (s.phase < 2) fail(ErrorCode::invalid_argument, "two-step needs at least 2 phase copies");
    if (s.phase >= cfg.n) {
        fail(ErrorCode::invalid_argument, "two-step phase copies leave no copies for theta1, theta2");
    }
    s.coarse = std::clamp<long long>(
        static_cast<long long>(std::ceil(std::pow(static_cast<double>(s.phase), cfg.coarse_exponent))),
        2, s.phase);
    s.refine = s.phase - s.coarse;
    s.interest = cfg.n - s.phase;
    return s;
}

/**
 * Two-step strategy with the phase unknown.
 *
 * Stage 1a: ceil(m^0.75) copies split between sigma1 and sigma2 give
 * phi = atan2(mean2, mean1). Stage 1b: the remaining phase copies measure
 * n_perp = (-sin phi, cos phi, 0) . sigma, whose mean is theta1 sin(theta3 - phi),
 * giving theta3_hat = phi + asin(mean / theta1). Stage 2: the optimal POVM
 * designed at theta3_hat on the other n - m copies, with the locally
 * unbiased estimator at (theta1, theta2, theta3_hat).
 */
inline SimResult run_two_step(const SimConfig& cfg) {
    detail::validate(cfg);
    const ThetaParams& t = cfg.theta_true;
    const TwoStepSplit split = two_step_split(cfg);
    std::vector<std::string> warnings;
    if (split.phase >= cfg.n - 1) {
        warnings.push_back("phase stage leaves a single copy for theta1, theta2");
    }
    const double a1 = std::abs(t.theta1());
    const double sign_shift = t.theta1() < 0.0 ? std::numbers::pi : 0.0;
    const double predicted_var =
        split.refine > 0 ? 1.0 / (a1 * a1 * static_cast<double>(split.refine)) : 0.0;
    const double bias_factor = cfg.phase_bias_correction ? std::exp(-0.5 * predicted_var) : 1.0;

    const Povm sx = Povm::projective({1.0, 0.0, 0.0}, "x");
    const Povm sy = Povm::projective({0.0, 1.0, 0.0}, "y");
    const auto px = sx.probabilities(t);
    const auto py = sy.probabilities(t);
    const BlochVector b = bloch_from_theta(t);

    std::vector<std::array<double, 2>> estimates(static_cast<std::size_t>(cfg.trials));
    std::vector<double> phases(static_cast<std::size_t>(cfg.trials));
    std::vector<char> flagged(static_cast<std::size_t>(cfg.trials), 0);

    detail::for_each_trial(cfg.trials, cfg.threads, [&](long long r) {
        auto rng = trial_stream(cfg.seed, static_cast<std::uint64_t>(r));
        const auto i = static_cast<std::size_t>(r);
        const long long nx = split.coarse / 2;
        const long long ny = split.coarse - nx;
        const auto cx = sample_counts(px, nx, rng);
        const auto cy = sample_counts(py, ny, rng);
        const double mx = nx > 0 ? static_cast<double>(cx[0] - cx[1]) / static_cast<double>(nx) : 0.0;
        const double my = static_cast<double>(cy[0] - cy[1]) / static_cast<double>(ny);
        if (mx == 0.0 && my == 0.0) flagged[i] = 1;
        double phase = std::atan2(my, mx) + sign_shift;
        if (split.refine > 0) {
            const Vec3 perp{-std::sin(phase), std::cos(phase), 0.0};
            const Povm pp = Povm::projective(perp);
            const auto c = sample_counts(pp.probabilities(b), split.refine, rng);
            const double mean = static_cast<double>(c[0] - c[1]) / static_cast<double>(split.refine);
            // mean estimates theta1 sin(theta3 - phase) once phase absorbs the sign of theta1
            phase += std::asin(std::clamp(mean / a1, -1.0, 1.0));
        }
        phase = wrap_phase(phase);
        phases[i] = phase;

        const ThetaParams design = t.with_phase(phase);
        const OptimalPovm opt = build_optimal_povm(design, cfg.weight);
        const QuantumEstimator est = build_optimal_estimator(design, opt.povm);
        auto avg = detail::average_estimate(est, sample_counts(opt.povm.probabilities(b), split.interest, rng));
        avg[0] /= bias_factor;
        estimates[i] = avg;
    });

    SimResult res = detail::summarise(cfg, estimates);
    res.phase_copies = split.phase;
    res.flagged_trials = std::count(flagged.begin(), flagged.end(), 1);
    res.warnings = std::move(warnings);
    detail::attach_phase_diagnostics(res, cfg, phases);
    return res;
}

/// Two-step results along a grid of n with everything else fixed.
inline std::vector<SimResult> run_two_step_grid(SimConfig cfg, const std::vector<long long>& ns) {
    std::vector<SimResult> out;
    for (long long n : ns) {
        cfg.n = n;
        out.push_back(run_two_step(cfg));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive strategy

/// Counts recorded with one measurement setting.
struct MeasurementRecord {
    Povm povm;
    std::vector<long long> counts;
};

/// Projects onto sign(theta1) = sign (shifting the phase by pi), radius <= 0.999
/// and |theta1| >= 1e-3. (theta1, theta3) and (-theta1, theta3 + pi) give the same state.
inline ThetaParams project_to_model(double t1, double t2, double t3, double sign = 1.0) {
    if (!std::isfinite(t1) || !std::isfinite(t2) || !std::isfinite(t3)) {
        fail(ErrorCode::non_finite, "estimate is not finite");
    }
    if (t1 * sign < 0.0) {
        t1 = -t1;
        t3 += std::numbers::pi;
    }
    t1 = sign * std::max(std::abs(t1), 1e-3);
    const double r = std::hypot(t1, t2);
    if (r > 0.999) {
        t1 *= 0.999 / r;
        t2 *= 0.999 / r;
    }
    return {t1, t2, t3};
}

inline double log_likelihood(const ThetaParams& t, const std::vector<MeasurementRecord>& data) {
    const BlochVector b = bloch_from_theta(t);
    double ll = 0.0;
    for (const auto& rec : data) {
        for (std::size_t x = 0; x < rec.counts.size(); ++x) {
            if (rec.counts[x] == 0) continue;
            const double p = rec.povm[x].op.expectation(b);
            if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
            ll += static_cast<double>(rec.counts[x]) * std::log(p);
        }
    }
    return ll;
}

struct MleResult {
    ThetaParams theta;
    bool converged = false;
    int iterations = 0;
};

/// Maximum likelihood for all three parameters: Newton steps on the observed
/// information (Fisher scoring when that is not positive definite), step
/// halving on the log-likelihood, projection into the model after every step.
inline MleResult fit_mle(const ThetaParams& start, const std::vector<MeasurementRecord>& data,
                         int max_steps) {
    const double sign = start.theta1() < 0.0 ? -1.0 : 1.0;
    MleResult res{start, false, 0};
    ThetaParams cur = start;
    double ll = log_likelihood(cur, data);
    for (int it = 0; it < max_steps; ++it) {
        res.iterations = it + 1;
        const BlochVector b = bloch_from_theta(cur);
        const auto ds = bloch_derivatives<3>(cur);
        const double c3 = std::cos(cur.theta3());
        const double s3 = std::sin(cur.theta3());
        // nonzero second derivatives of s: d1 d3 s and d3 d3 s
        const Vec3 d13{-s3, c3, 0.0};
        const Vec3 d33{-cur.theta1() * c3, -cur.theta1() * s3, 0.0};
        Sym3 expected;
        Sym3 observed;
        std::array<double, 3> score{};
        for (const auto& rec : data) {
            long long total = 0;
            for (long long c : rec.counts) total += c;
            if (total == 0) continue;
            for (std::size_t x = 0; x < rec.counts.size(); ++x) {
                const auto& op = rec.povm[x].op;
                const double p = op.expectation(b);
                if (p < dead_outcome_probability) continue;
                const double nx = static_cast<double>(rec.counts[x]);
                const std::array<double, 3> g{dot(ds[0], op.c), dot(ds[1], op.c), dot(ds[2], op.c)};
                const double h13 = dot(d13, op.c);
                const double h33 = dot(d33, op.c);
                for (std::size_t i = 0; i < 3; ++i) {
                    score[i] += nx * g[i] / p;
                    for (std::size_t j = i; j < 3; ++j) {
                        expected(i, j) += static_cast<double>(total) * g[i] * g[j] / p;
                        observed(i, j) += nx * g[i] * g[j] / (p * p);
                    }
                }
                observed(0, 2) -= nx * h13 / p;
                observed(2, 2) -= nx * h33 / p;
            }
        }
        std::array<double, 3> step{};
        try {
            const Sym3 inv = inverse(min_eigenvalue(observed) > 0.0 ? observed : expected);
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) step[i] += inv(i, j) * score[j];
        } catch (const Error&) {
            return res;
        }
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h, scale *= 0.5) {
            const ThetaParams trial = project_to_model(cur.theta1() + scale * step[0],
                                                       cur.theta2() + scale * step[1],
                                                       cur.theta3() + scale * step[2], sign);
            const double tll = log_likelihood(trial, data);
            if (tll >= ll - 1e-12) {
                const double moved = std::max({std::abs(trial.theta1() - cur.theta1()),
                                               std::abs(trial.theta2() - cur.theta2()),
                                               std::abs(phase_difference(trial.theta3(), cur.theta3()))});
                cur = trial;
                ll = tll;
                accepted = true;
                if (moved < 1e-9) {
                    res.theta = cur;
                    res.converged = true;
                    return res;
                }
                break;
            }
        }
        if (!accepted) {
            // no ascent along the step: a maximum up to round-off
            res.theta = cur;
            res.converged = true;
            return res;
        }
    }
    res.theta = cur;
    return res;
}

/// Six-outcome tomography: sigma1, sigma2, sigma3 pairs with weight 1/3 each.
inline Povm tomography_povm() {
    std::vector<PovmElement> e;
    for (const auto& [dir, name] : {std::pair<Vec3, const char*>{{1.0, 0.0, 0.0}, "x"},
                                    std::pair<Vec3, const char*>{{0.0, 1.0, 0.0}, "y"},
                                    std::pair<Vec3, const char*>{{0.0, 0.0, 1.0}, "z"}}) {
        auto pair = Povm::projective_pair(dir, name, 1.0 / 3.0);
        e.insert(e.end(), pair.begin(), pair.end());
    }
    return Povm(std::move(e));
}

/**
 * Batched adaptive strategy. The first batch is tomographic. Each later batch
 * first spends enough copies on the perpendicular phase measurement at the
 * current phase estimate to keep the cumulative phase share at
 * consumed^exponent, and measures the rest with the optimal POVM designed at
 * the current estimate. After each batch all three parameters are refitted
 * by maximum likelihood over every count so far.
 */
inline SimResult run_adaptive(const SimConfig& cfg) {
    detail::validate(cfg);
    if (cfg.batch_size < 1) fail(ErrorCode::invalid_argument, "batch size must be positive");
    const ThetaParams& t = cfg.theta_true;
    const BlochVector b = bloch_from_theta(t);
    const Povm tomo = tomography_povm();
    const double exponent = phase_exponent(cfg);

    std::vector<std::array<double, 2>> estimates(static_cast<std::size_t>(cfg.trials));
    std::vector<double> phases(static_cast<std::size_t>(cfg.trials));
    std::vector<char> flagged(static_cast<std::size_t>(cfg.trials), 0);

    detail::for_each_trial(cfg.trials, cfg.threads, [&](long long r) {
        auto rng = trial_stream(cfg.seed, static_cast<std::uint64_t>(r));
        const auto i = static_cast<std::size_t>(r);
        std::vector<MeasurementRecord> data;
        long long consumed = std::min(cfg.batch_size, cfg.n);
        data.push_back({tomo, sample_counts(tomo.probabilities(b), consumed, rng)});

        // linear inversion of the tomography counts as the starting point
        const auto& c = data.front().counts;
        const double per = static_cast<double>(consumed) / 3.0;
        const Vec3 s_hat{static_cast<double>(c[0] - c[1]) / per, static_cast<double>(c[2] - c[3]) / per,
                         static_cast<double>(c[4] - c[5]) / per};
        // theta1 is identified only up to sign; use the sign convention of the model point
        ThetaParams cur = project_to_model(std::hypot(s_hat[0], s_hat[1]), s_hat[2],
                                           std::atan2(s_hat[1], s_hat[0]), t.theta1() < 0.0 ? -1.0 : 1.0);
        auto fit = fit_mle(cur, data, cfg.max_newton_steps);
        if (fit.converged) cur = fit.theta;
        else flagged[i] = 1;

        long long phase_used = 0;
        while (consumed < cfg.n) {
            const long long batch = std::min(cfg.batch_size, cfg.n - consumed);
            const long long target = static_cast<long long>(
                std::ceil(std::pow(static_cast<double>(consumed + batch), exponent)));
            const long long phase_batch = std::clamp<long long>(target - phase_used, 0, batch);
            if (phase_batch > 0) {
                const Vec3 perp{-std::sin(cur.theta3()), std::cos(cur.theta3()), 0.0};
                Povm pp = Povm::projective(perp);
                auto counts = sample_counts(pp.probabilities(b), phase_batch, rng);
                data.push_back({std::move(pp), std::move(counts)});
                phase_used += phase_batch;
            }
            if (batch > phase_batch) {
                Povm opt = build_optimal_povm(cur, cfg.weight).povm;
                auto counts = sample_counts(opt.probabilities(b), batch - phase_batch, rng);
                data.push_back({std::move(opt), std::move(counts)});
            }
            consumed += batch;
            fit = fit_mle(cur, data, cfg.max_newton_steps);
            if (fit.converged) cur = fit.theta;
            else flagged[i] = 1;
        }
        estimates[i] = cur.interest();
        phases[i] = cur.theta3();
    });

    SimResult res = detail::summarise(cfg, estimates);
    res.flagged_trials = std::count(flagged.begin(), flagged.end(), 1);
    detail::attach_phase_diagnostics(res, cfg, phases);
    return res;
}

inline SimResult run_simulation(const SimConfig& cfg) {
    switch (cfg.strategy) {
    case Strategy::single_copy_optimal: return run_single_copy_optimal(cfg);
    case Strategy::two_step: return run_two_step(cfg);
    case Strategy::adaptive: return run_adaptive(cfg);
    }
    fail(ErrorCode::invalid_argument, "unknown strategy");
}

} // namespace qest
