#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "beacof/cli.hpp"

// CLI entry point. Subcommands: run, verify-convergence, report, replay.
// Exit codes: 0 success, 1 failure, 2 config, 3 backend, 4 trace, 5 mode.

int main(int argc, char** argv) {
    CLI::App app{"beacof: belief-driven multi-agent coordination engine"};
    app.require_subcommand(1);

    beacof::cli::RunOptions run_options;
    CLI::App* run = app.add_subcommand("run", "run batch simulations from a config file");
    run->add_option("--config", run_options.config_path, "simulation config file")
        ->required();
    run->add_option("--batch", run_options.batch, "number of runs (seeds seed..seed+batch-1)");
    std::uint64_t seed_override = 0;
    CLI::Option* seed_opt =
        run->add_option("--seed", seed_override, "base seed (overrides the config)");
    run->add_option("--out", run_options.out_dir, "output directory for traces");
    run->add_option("--jobs", run_options.jobs, "parallel simulations cap");
    run->add_flag("--force", run_options.force, "overwrite existing trace files");

    beacof::cli::VerifyOptions verify_options;
    CLI::App* verify = app.add_subcommand(
        "verify-convergence", "check steady-state precision and variance predictions");
    verify->add_option("--lambda", verify_options.lambda, "forgetting factor in (0,1)");
    verify->add_option("--sigma", verify_options.sigma, "observation noise sigma");
    verify->add_option("--trials", verify_options.trials, "independent chains");
    verify->add_option("--rounds", verify_options.rounds, "rounds per chain");
    verify->add_option("--seed", verify_options.seed, "stream seed");
    verify->add_option("--omega-init", verify_options.omega_init, "initial precision");
    verify->add_option("--theta", verify_options.theta,
                       "true capability coordinates (repeatable)");
    verify->add_option("--out", verify_options.out_path, "write per-trial stats here");

    beacof::cli::ReportOptions report_options;
    CLI::App* report = app.add_subcommand("report", "summarize trace files");
    report->add_option("traces", report_options.trace_paths, "trace files")
        ->required()
        ->expected(-1);
    report->add_option("--kind", report_options.kind, "regret | convergence");
    report->add_option("--format", report_options.format, "text | machine");

    beacof::cli::ReplayOptions replay_options;
    CLI::App* replay = app.add_subcommand("replay", "re-execute a scripted trace and verify it");
    replay->add_option("trace", replay_options.trace_path, "trace file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : beacof::cli::kExitConfig;
    }

    if (run->parsed()) {
        if (seed_opt->count() > 0) run_options.seed = seed_override;
        return beacof::cli::cmd_run(run_options, std::cout, std::cerr);
    }
    if (verify->parsed()) {
        return beacof::cli::cmd_verify_convergence(verify_options, std::cout, std::cerr);
    }
    if (report->parsed()) {
        return beacof::cli::cmd_report(report_options, std::cout, std::cerr);
    }
    if (replay->parsed()) {
        return beacof::cli::cmd_replay(replay_options, std::cout, std::cerr);
    }
    return beacof::cli::kExitConfig;
}
