#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "nclab/config.hpp"
#include "nclab/harness.hpp"
#include "nclab/parallel.hpp"

using namespace nclab;

namespace {

struct Globals {
    std::string config;
    std::string out;
    unsigned threads = 1;
    double tolerance_scale = 1.0;
};

ExperimentConfig load(const Globals& g, std::filesystem::path& dir) {
    ExperimentConfig cfg = ExperimentConfig::load(g.config);
    if (!g.out.empty()) cfg.output_dir = g.out;
    cfg.tolerances = cfg.tolerances.scaled(g.tolerance_scale);
    set_thread_count(g.threads);
    dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.yaml") << cfg.to_yaml();
    return cfg;
}

int finish(const std::vector<CheckRow>& rows) {
    print_rows(std::cout, rows);
    const bool ok = all_pass(rows);
    std::cout << (ok ? "all checks passed" : "some checks failed") << '\n';
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Newton-Cartan geometry lab: spacetime checks, geometrization and center-of-mass experiments"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--out", g.out, "Output directory (overrides the config)");
    app.add_option("--threads", g.threads, "Worker threads; 0 uses every core")->check(CLI::NonNegativeNumber);
    app.add_option("--tolerance-scale", g.tolerance_scale, "Multiply every tolerance")->check(CLI::NonNegativeNumber);

    int code = 0;
    auto add = [&](const std::string& name, const std::string& help, auto run) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", g.config, "YAML configuration")->required()->check(CLI::ExistingFile);
        sub->callback([&, run] {
            std::filesystem::path dir;
            const ExperimentConfig cfg = load(g, dir);
            code = run(cfg, dir);
        });
    };

    add("check-spacetime", "Structure and curvature residuals of the configured spacetime",
        [](const ExperimentConfig& cfg, const std::filesystem::path& dir) {
            const auto rows = check_spacetime(cfg);
            write_rows(dir, rows);
            return finish(rows);
        });
    add("geometrize", "Curvature conditions of the geometrized model and geodesic equivalence",
        [](const ExperimentConfig& cfg, const std::filesystem::path& dir) {
            const auto rows = run_geometrize(cfg);
            write_rows(dir, rows);
            return finish(rows);
        });
    add("recover", "Recover a flat operator and potential and compare with the originals",
        [](const ExperimentConfig& cfg, const std::filesystem::path& dir) {
            const auto rows = run_recovery(cfg);
            write_rows(dir, rows);
            return finish(rows);
        });
    add("first-law", "Straight-line fit of the center-of-mass track in flat spacetime",
        [](const ExperimentConfig& cfg, const std::filesystem::path& dir) {
            const FirstLawReport r = run_first_law(cfg);
            write_first_law(dir, r);
            return finish(r.rows);
        });
    add("theorem-w", "Center-of-mass deviation from a geodesic as the body shrinks",
        [](const ExperimentConfig& cfg, const std::filesystem::path& dir) {
            const ConvergenceReport r = run_theorem_w_sweep(cfg);
            write_convergence(dir, r);
            for (const ConvergenceRecord& c : r.records) {
                std::cout << "eps=" << c.epsilon << " deviation=" << c.deviation << '\n';
            }
            std::cout << "fitted order (informational): " << r.fitted_order << '\n';
            return finish(r.rows);
        });
    add("props", "Conservation, center-of-mass and geometrization checks as one table",
        [](const ExperimentConfig& cfg, const std::filesystem::path& dir) {
            const auto rows = run_proposition_suite(cfg);
            write_rows(dir, rows);
            return finish(rows);
        });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return code;
}
