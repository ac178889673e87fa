#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "oam/commands.hpp"

namespace {

enum Exit { ok = 0, usage = 1, config = 2, convergence = 3, io = 4 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group delay of OAM superpositions through a twisted double slit"};
    app.require_subcommand(1);
    std::string config_path, output;
    long long seed = -1;
    int threads = -1;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"fig1", "delay versus l with the 1.2 m / 2 m inset table"},
        {"delay-curve", "tau(z) for each configured l and its two-mode superposition"},
        {"hom-sim", "synthetic HOM scans, fitted shifts and the measured-delay comparison"},
        {"profile", "PGM intensity images plus inner diameter and aperture power"},
        {"mask", "PGM phase masks plus disk-model mode weights"},
        {"coupling", "fiber-coupling efficiency and distinguishability"},
        {"sensitivity", "delay versus r_max factor, z_min, aperture and waist"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "configuration file")->required();
        sub->add_option("-o,--output", output, "output directory (overrides run.output)");
        sub->add_option("--seed", seed, "random seed (overrides run.seed)")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", threads, "worker threads, 0 = all cores (overrides run.threads)")
            ->check(CLI::NonNegativeNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    oam::RunConfig cfg;
    try {
        cfg = oam::load_config(config_path);
        if (!output.empty()) cfg.output = output;
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (threads >= 0) cfg.threads = static_cast<unsigned>(threads);
    } catch (const oam::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    } catch (const oam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config;
    }

    try {
        if (cmd == "fig1") oam::run_fig1(cfg, std::cout);
        else if (cmd == "delay-curve") oam::run_delay_curve(cfg, std::cout);
        else if (cmd == "hom-sim") oam::run_hom_sim(cfg, std::cout);
        else if (cmd == "profile") oam::run_profile(cfg, std::cout);
        else if (cmd == "mask") oam::run_mask(cfg, std::cout);
        else if (cmd == "coupling") oam::run_coupling(cfg, std::cout);
        else if (cmd == "sensitivity") oam::run_sensitivity(cfg, std::cout);
    } catch (const oam::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    } catch (const oam::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return convergence;
    } catch (const oam::ResolutionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return convergence;
    } catch (const oam::FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return convergence;
    } catch (const oam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config;
    }
    return ok;
}
