// workbench <subcommand> --config FILE [--out DIR] [overrides]

#include "dynwork/workbench.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <optional>

namespace cli = dynwork::cli;

int main(int argc, char** argv) {
    CLI::App app{"Exact spectra, cones, heights and Atiyah bundles for dynamical experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cli::kVersion));

    std::string config, out = ".", cache_file;
    std::optional<std::uint64_t> seed;
    std::optional<long> precision;
    std::optional<std::size_t> budget;
    bool log_heights_only = false;

    for (const auto& kind : cli::kinds()) {
        CLI::App* sub = app.add_subcommand(kind, "run a '" + kind + "' experiment");
        sub->add_option("--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--precision", precision, "MPFR precision in bits")->check(CLI::Range(32L, 65536L));
        sub->add_option("--digit-budget", budget, "max decimal digits per orbit coordinate")->check(CLI::PositiveNumber);
        sub->add_flag("--log-heights-only", log_heights_only, "orbit: emit log heights instead of coordinates");
        sub->add_option("--cache", cache_file, "JSON-lines orbit cache (orbit, heights)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : cli::kExitSchema;
    }
    const std::string kind = app.get_subcommands().front()->get_name();

    try {
        cli::ExperimentConfig cfg = cli::load_config(config);
        if (cfg.kind != kind)
            throw dynwork::SchemaError("kind: config is '" + cfg.kind + "' but the subcommand is '" + kind + "'");
        if (seed) cfg.settings.seed = *seed;
        if (precision) cfg.settings.precision = *precision;
        if (budget) cfg.settings.digit_budget = *budget;
        if (log_heights_only) cfg.settings.log_heights_only = true;

        std::unique_ptr<cli::OrbitCache> cache;
        if (!cache_file.empty()) cache = std::make_unique<cli::OrbitCache>(cache_file);

        const cli::RunResult r = cli::run(cfg, cache.get());
        cli::write_outputs(out, cfg, r);
        std::cout << r.report.dump(2) << "\n";
        return r.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "workbench: " << e.what() << "\n";
        return cli::exit_code_for(e);
    }
}
