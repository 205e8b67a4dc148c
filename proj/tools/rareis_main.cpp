// rareis: rare-event default probabilities by subsolution-based importance
// sampling.
//
//   rareis estimate --config run.cfg [--seed S] [--workers W] [--out DIR]
//   rareis tables   [--seed S] [--workers W] [--out DIR]
//   rareis verify   --config run.cfg
//   rareis oracle   --config run.cfg [--out DIR]

#include "rareis/cli.hpp"
#include "rareis/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir;
};

void add_common(CLI::App* cmd, Options& opts, bool needs_config) {
    auto* cfg = cmd->add_option("--config", opts.config_path, "run configuration file");
    if (needs_config) cfg->required();
    cmd->add_option("--seed", opts.seed, "master seed (overrides run.seed)");
    cmd->add_option("--workers", opts.workers, "worker threads (overrides run.workers)");
    cmd->add_option("--out", opts.out_dir, "output directory for CSV files");
}

rareis::RunConfig resolve(const Options& opts) {
    std::istringstream defaults;
    rareis::RunConfig config = opts.config_path.empty()
                                   ? rareis::parse_config(defaults, "<defaults>")
                                   : rareis::load_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    if (opts.workers) config.workers = *opts.workers;
    return config;
}

std::ostream& open_output(const Options& opts, const char* file, std::ofstream& storage) {
    if (opts.out_dir.empty()) return std::cout;
    std::filesystem::create_directories(opts.out_dir);
    const auto path = std::filesystem::path(opts.out_dir) / file;
    storage.open(path);
    if (!storage) throw rareis::ConfigError("cannot write " + path.string());
    return storage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Importance sampling for contagion default models"};
    app.require_subcommand(1);
    Options opts;
    auto* estimate = app.add_subcommand("estimate", "estimate hitting probabilities");
    auto* tables = app.add_subcommand("tables", "run the three reference experiments");
    auto* verify = app.add_subcommand("verify", "structural and oracle checks");
    auto* oracle = app.add_subcommand("oracle", "exact probabilities for small populations");
    add_common(estimate, opts, true);
    add_common(tables, opts, false);
    add_common(verify, opts, true);
    add_common(oracle, opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? rareis::kExitOk : rareis::kExitConfig;
    }

    try {
        const auto config = resolve(opts);
        std::ofstream file;
        if (estimate->parsed()) {
            (void)rareis::cmd_estimate(config, open_output(opts, "estimate.csv", file), std::cerr);
        } else if (tables->parsed()) {
            rareis::cmd_tables(config.seed, config.workers,
                               std::filesystem::path(opts.out_dir.empty() ? "." : opts.out_dir),
                               std::cerr);
        } else if (verify->parsed()) {
            if (!rareis::cmd_verify(config, std::cout)) return rareis::kExitVerification;
        } else if (oracle->parsed()) {
            rareis::cmd_oracle(config, open_output(opts, "oracle.csv", file));
        }
    } catch (const rareis::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return rareis::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return rareis::kExitNumerical;
    }
    return rareis::kExitOk;
}
