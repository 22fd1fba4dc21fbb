#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "saesg/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"South African stochastic investment model: fit, diagnose, stability, simulate, backtest"};
    app.set_version_flag("--version", saesg::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides seed)");

    saesg::CommandArgs args;

    app.add_subcommand("fit", "Fit every configured model in cascade order");

    auto* diagnose = app.add_subcommand("diagnose", "Residual diagnostics and KPSS test for one series");
    std::string diag_series;
    diagnose->add_option("--series", diag_series, "Series name")->required();

    auto* stability = app.add_subcommand("stability", "Recursive estimates with 95% bands");
    std::string stab_series, direction;
    int min_obs = 0;
    bool parallel = false;
    auto* stab_series_opt = stability->add_option("--series", stab_series, "Series name");
    auto* dir_opt = stability->add_option("--direction", direction, "expanding_end or expanding_start");
    auto* min_opt = stability->add_option("--min-obs", min_obs, "Minimum observations per sub-period");
    auto* par_opt = stability->add_flag("--parallel", parallel, "Independent starts on worker threads");

    app.add_subcommand("simulate", "Monte Carlo scenarios and forecast fans");

    auto* backtest = app.add_subcommand("backtest", "Fit to a split year and check the holdout against fans");
    int split_year = 0;
    auto* split_opt = backtest->add_option("--split-year", split_year, "Last year used for fitting");

    auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    std::string manifest;
    replay->add_option("--manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : saesg::exit_validation;
    }

    const std::optional<std::filesystem::path> out =
        out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir);
    if (*replay) return saesg::replay_manifest(manifest, out, std::cout, std::cerr);

    args.command = app.get_subcommands().front()->get_name();
    args.out = out;
    if (*seed_opt) args.seed = seed;
    if (*diagnose) args.series = diag_series;
    if (*stab_series_opt) args.series = stab_series;
    if (*dir_opt) args.direction = direction;
    if (*min_opt) args.min_obs = min_obs;
    if (*par_opt) args.parallel = parallel;
    if (*split_opt) args.split_year = split_year;

    if (config_path.empty()) {
        std::cerr << args.command << ": --config is required\n";
        return saesg::exit_validation;
    }
    return saesg::run_command(std::filesystem::path(config_path), args, std::cout, std::cerr);
}
