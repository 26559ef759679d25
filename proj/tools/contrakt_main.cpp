#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "contrakt/cli.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string output_override;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "run configuration (JSON)")->required();
    sub->add_option("--output", opts.output_override, "override output directory");
    sub->add_option("--seed", opts.seed_override, "override the run seed")
        ->each([&opts](const std::string&) { opts.has_seed = true; });
}

contrakt::RunConfig load(const CommonOpts& opts) {
    contrakt::RunConfig cfg = contrakt::load_run_config(opts.config_path);
    if (!opts.output_override.empty()) cfg.output_dir = opts.output_override;
    if (opts.has_seed) {
        cfg.train.seed = opts.seed_override;
        cfg.sim_seed = opts.seed_override;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-train and certify slope-restricted neural controllers"};
    app.require_subcommand(1);

    CommonOpts opts;
    CLI::App* train = app.add_subcommand("train", "run the co-synthesis optimization");
    CLI::App* certify = app.add_subcommand("certify", "check the Gershgorin certificate");
    CLI::App* simulate = app.add_subcommand("simulate", "batch closed-loop rollouts");
    CLI::App* bounds = app.add_subcommand("bounds", "print controller Jacobian bounds");
    CLI::App* lqr = app.add_subcommand("lqr", "solve the LQR baseline");
    for (CLI::App* sub : {train, certify, simulate, bounds, lqr}) add_common(sub, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : contrakt::exit_code::usage;
    }

    try {
        const contrakt::RunConfig cfg = load(opts);
        if (train->parsed()) return contrakt::cmd_train(cfg);
        if (certify->parsed()) return contrakt::cmd_certify(cfg);
        if (simulate->parsed()) return contrakt::cmd_simulate(cfg);
        if (bounds->parsed()) return contrakt::cmd_bounds(cfg);
        if (lqr->parsed()) return contrakt::cmd_lqr(cfg);
        return contrakt::exit_code::usage;
    } catch (const contrakt::ConfigError& e) {
        contrakt::log_error(e.what());
        return contrakt::exit_code::usage;
    } catch (const contrakt::InputError& e) {
        contrakt::log_error(e.what());
        return contrakt::exit_code::bad_input;
    } catch (const std::exception& e) {
        contrakt::log_error(e.what());
        return contrakt::exit_code::internal;
    }
}
