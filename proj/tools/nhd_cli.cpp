// nhd: run the figure pipelines and the validation suite.
//
//   nhd run      --config cfg.toml            JSON report + rows CSV
//   nhd figure2  --config cfg.toml --plots    three-state Bloch data
//   nhd figure3  --out out/                   metric reconstruction data
//   nhd validate                              invariant table
//
// Exit codes: 0 ok, 1 config error, 2 validation failure (3 for anything else).

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nhd/experiment/output.hpp"
#include "nhd/validation.hpp"

namespace ex = nhd::experiment;

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> shots;
    std::string scheme;
    bool plots = false;
};

void add_common(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--config", o.config, "TOML configuration file");
    cmd->add_option("--out", o.out, "output directory (overrides out_dir)");
    cmd->add_option("--seed", o.seed, "run a single seed");
    cmd->add_option("--shots", o.shots, "shots per basis");
    cmd->add_option("--scheme", o.scheme, "naimark, bond, gbond or exact");
    cmd->add_flag("--plots", o.plots, "also write SVG plots");
}

ex::ExperimentConfig resolve(const Overrides &o) {
    ex::ExperimentConfig cfg = o.config.empty() ? ex::ExperimentConfig{} : ex::load_config(o.config);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.shots) cfg.shots = *o.shots;
    if (!o.scheme.empty()) cfg.scheme = ex::parse_scheme(o.scheme);
    if (o.plots) cfg.emit_plots = true;
    ex::validate(cfg);
    return cfg;
}

void list(const std::vector<std::filesystem::path> &files) {
    for (const auto &f : files) {
        std::printf("wrote %s\n", f.string().c_str());
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"non-Hermitian dilation experiments"};
    app.require_subcommand(1);
    Overrides o;
    CLI::App *run = app.add_subcommand("run", "run the configured scheme, write report.json and rows.csv");
    CLI::App *fig2 = app.add_subcommand("figure2", "three-state Bloch vectors (GBoNd by default)");
    CLI::App *fig3 = app.add_subcommand("figure3", "rho psi trajectory and metric reconstruction (BoNd)");
    CLI::App *val = app.add_subcommand("validate", "run the invariant suite");
    for (CLI::App *c : {run, fig2, fig3}) {
        add_common(c, o);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        if (val->parsed()) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto checks = nhd::validation::run_all();
            nhd::validation::print_table(checks);
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const bool ok = nhd::validation::all_passed(checks);
            std::printf("%s in %.1f s\n", ok ? "all checks passed" : "some checks FAILED", s);
            return ok ? 0 : 2;
        }
        const ex::ExperimentConfig cfg = resolve(o);
        if (run->parsed()) {
            const ex::RunReport rep = ex::run(cfg);
            for (const auto &w : rep.warnings) {
                std::fprintf(stderr, "warning: %s\n", w.c_str());
            }
            list(ex::write_run(rep));
        } else if (fig2->parsed()) {
            list(ex::figure2(cfg));
        } else if (fig3->parsed()) {
            list(ex::figure3(cfg));
        }
        return 0;
    } catch (const nhd::ConfigError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
