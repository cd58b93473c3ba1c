#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "formlab/errors.hpp"
#include "formlab/scenario.hpp"

namespace {

void print_summary(const formlab::AnalysisReport& rep) {
    std::cout << "scenario: " << rep.scenario_name << " (" << rep.controller << ", n="
              << rep.node_count << ", m=" << rep.dim << ")\n";
    std::cout << "graph: " << (rep.connected ? "connected" : "disconnected")
              << (rep.tree ? ", tree" : ", has cycles") << "\n";
    if (rep.spectrum) {
        std::cout << "spectrum: zero_count=" << rep.spectrum->zero_count
                  << " min_nonzero_real=" << rep.spectrum->min_nonzero_real
                  << " stable=" << (rep.spectrum->stable ? "yes" : "no") << "\n";
    }
    if (rep.design) {
        std::cout << "design: kappa=" << rep.design->kappa;
        if (rep.design->kappa_bound) {
            std::cout << " (bound " << *rep.design->kappa_bound << ")";
        }
        std::cout << " v*=[";
        for (Eigen::Index i = 0; i < rep.design->v_star.size(); ++i) {
            std::cout << (i ? ", " : "") << rep.design->v_star(i);
        }
        std::cout << "]\n";
    }
    if (rep.prediction) {
        std::cout << "prediction: v~*=[";
        for (Eigen::Index i = 0; i < rep.prediction->v_tilde.size(); ++i) {
            std::cout << (i ? ", " : "") << rep.prediction->v_tilde(i);
        }
        std::cout << "] |M_breve|max=" << rep.prediction->m_breve_max_abs
                  << (rep.prediction->realizable
                          ? " (realizable)"
                          : " (unstable closed loop - prediction not attractive)")
                  << "\n";
        if (rep.prediction->consistency_residual > 1e-6) {
            std::cout << "warning: drift blocks deviate by "
                      << rep.prediction->consistency_residual << "\n";
        }
    }
    if (rep.simulation) {
        std::cout << "simulation: steps=" << rep.simulation->steps
                  << " final shape error=" << rep.simulation->final_shape_error
                  << " final velocity error=" << rep.simulation->final_velocity_error
                  << " settled=" << (rep.simulation->settled ? "yes" : "no") << "\n";
    }
    for (const std::string& f : rep.files) {
        std::cout << "wrote " << f << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"formlab: displacement-consensus formation control laboratory"};
    std::string scenario_path;
    std::string command = "full";
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool quiet = false;

    app.add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    app.add_option("--command", command, "Stage to run: check|design|predict|simulate|full");
    app.add_option("--out", out_dir, "Output directory (created if missing)");
    auto* seed_option =
        app.add_option("--seed", seed, "Override the scenario's random seed");
    app.add_flag("--quiet", quiet, "Suppress the summary printout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const formlab::Scenario scenario = formlab::load_scenario(scenario_path);
        formlab::RunOptions options;
        options.out_dir = out_dir;
        options.quiet = quiet;
        if (seed_option->count() > 0) {
            options.seed_override = seed;
        }
        const formlab::AnalysisReport report =
            formlab::run_scenario(scenario, formlab::parse_command(command), options);
        if (!quiet) {
            print_summary(report);
        }
        if (report.simulation && report.simulation->diverged) {
            std::cerr << "divergence: state left the finite range at step "
                      << report.simulation->divergence_step << " (t="
                      << report.simulation->divergence_step * report.simulation->dt
                      << "); the closed loop is unstable\n";
            return 3;
        }
        return 0;
    } catch (const formlab::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const formlab::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
}
