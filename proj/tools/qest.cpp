#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "commands.hpp"

namespace {

void add_common(CLI::App* sub, qest::cli::CommonOptions& o, bool nuisance) {
    sub->add_option("--theta", o.theta, "model point t1,t2,t3")->capture_default_str();
    sub->add_option("--weight", o.weight, "identity, row-major CSV values, or a CSV file")->capture_default_str();
    if (nuisance) {
        sub->add_option("--w3", o.w3, "phase weight for the block form")->capture_default_str();
        sub->add_option("--nuisance", o.nuisance, "known or unknown phase")
            ->check(CLI::IsMember({"known", "unknown"}))
            ->capture_default_str();
    }
    sub->add_option("--output", o.output, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Qubit estimation bounds, optimal measurements and simulation"};
    app.require_subcommand(1);

    qest::cli::CommonOptions bounds_opts;
    auto* bounds = app.add_subcommand("bounds", "SLD, RLD, Nagaoka/HGM and Holevo bounds");
    add_common(bounds, bounds_opts, true);

    qest::cli::CommonOptions povm_opts;
    auto* povm = app.add_subcommand("povm", "optimal POVM and locally unbiased estimator (known phase)");
    add_common(povm, povm_opts, false);

    qest::cli::RegionOptions region_opts;
    auto* region = app.add_subcommand("region", "membership of a candidate MSE matrix");
    region->add_option("--theta", region_opts.theta, "model point t1,t2,t3")->capture_default_str();
    region->add_option("--v", region_opts.v, "candidate V: row-major CSV values or a CSV file")->required();
    region->add_option("--set", region_opts.set, "D, D_GM, H (2x2); D3, SLD3, H (3x3)");
    region->add_option("--output", region_opts.output, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    qest::cli::SimulateOptions sim_opts;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo MSE of an estimation strategy");
    simulate->add_option("--theta", sim_opts.theta, "true model point t1,t2,t3")->capture_default_str();
    simulate->add_option("--weight", sim_opts.weight, "2x2 weight: identity or CSV")->capture_default_str();
    simulate->add_option("--strategy", sim_opts.strategy, "single-copy-optimal, two-step or adaptive")
        ->check(CLI::IsMember({"single-copy-optimal", "single", "two-step", "adaptive"}))
        ->capture_default_str();
    simulate->add_option("--n", sim_opts.n, "copies per trial; a comma list runs a grid")->capture_default_str();
    simulate->add_option("--trials", sim_opts.trials, "independent trials")->capture_default_str();
    simulate->add_option("--seed", sim_opts.seed, "seed (QEST_SEED overrides)")->capture_default_str();
    simulate->add_option("--phase-exponent", sim_opts.phase_exponent, "phase copies scale as n^exponent");
    simulate->add_option("--threads", sim_opts.threads, "worker threads, 0 = all cores")->capture_default_str();
    simulate->add_option("--output", sim_opts.output, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    qest::cli::SweepOptions sweep_opts;
    sweep_opts.common.output = "csv";
    auto* sweep = app.add_subcommand("sweep", "bounds along one parameter axis");
    add_common(sweep, sweep_opts.common, true);
    sweep->add_option("--axis", sweep_opts.axis, "theta1, theta2 or theta3")
        ->check(CLI::IsMember({"theta1", "theta2", "theta3"}))
        ->capture_default_str();
    sweep->add_option("--min", sweep_opts.min)->capture_default_str();
    sweep->add_option("--max", sweep_opts.max)->capture_default_str();
    sweep->add_option("--steps", sweep_opts.steps)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        std::string out;
        if (*bounds) {
            out = qest::cli::cmd_bounds(bounds_opts);
        } else if (*povm) {
            out = qest::cli::cmd_povm(povm_opts);
        } else if (*region) {
            out = qest::cli::cmd_region(region_opts);
        } else if (*simulate) {
            out = qest::cli::cmd_simulate(sim_opts);
        } else if (*sweep) {
            std::vector<std::string> notices;
            out = qest::cli::cmd_sweep(sweep_opts, notices);
            for (const auto& n : notices) std::cerr << "notice: " << n << '\n';
        }
        std::cout << out;
    } catch (const qest::Error& e) {
        std::cerr << "error (" << qest::to_string(e.code()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
