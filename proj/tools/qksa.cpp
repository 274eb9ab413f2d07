// qksa: run populations of quantum knowledge-seeking agents.
//
//   qksa run <config> [--run-dir DIR]
//   qksa experiment-s5 --seeds 20 --steps 8192 --out DIR
//   qksa report <run_dir>
//   qksa validate <config>
//
// Exit codes: 0 success, 1 config error, 2 runtime fault.

#include <iostream>

#include <CLI11.hpp>

#include "qksa/qksa.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeFault = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum knowledge-seeking agent populations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string run_dir_override;
    auto* run_cmd = app.add_subcommand("run", "run the agent population described by a config file");
    run_cmd->add_option("config", config_path, "config file")->required();
    run_cmd->add_option("--run-dir", run_dir_override, "output directory (overrides run_dir)");

    std::uint64_t seeds = 20;
    std::uint64_t steps = 8192;
    std::uint64_t seed_base = 1;
    std::string out_dir = "s5";
    auto* s5_cmd = app.add_subcommand("experiment-s5", "random 1-qubit unitary convergence experiment");
    s5_cmd->add_option("--seeds", seeds, "number of random unitaries")->capture_default_str();
    s5_cmd->add_option("--steps", steps, "steps per agent")->capture_default_str();
    s5_cmd->add_option("--seed-base", seed_base, "first seed")->capture_default_str();
    s5_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();

    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "summarize a finished run");
    report_cmd->add_option("run_dir", report_dir, "run directory")->required();

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "parse and check a config file");
    validate_cmd->add_option("config", validate_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) {
            qksa::ExperimentConfig cfg;
            try {
                cfg = qksa::load_config(config_path);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kConfigError;
            }
            if (!run_dir_override.empty()) cfg.run_dir = run_dir_override;
            const auto summary = qksa::run(cfg);
            for (const auto& rep : summary.replicas) {
                std::size_t dead = 0;
                for (const auto& a : rep.agents) dead += a.status == qksa::AgentStatus::dead;
                std::cout << rep.dir.string() << ": " << rep.agents.size() << " agents, " << rep.steps_executed
                          << " steps, " << dead << " dead\n";
            }
        } else if (*s5_cmd) {
            qksa::S5Options opt;
            opt.seeds = seeds;
            opt.steps = steps;
            opt.seed_base = seed_base;
            opt.out_dir = out_dir;
            const auto rows = qksa::experiment_s5(opt);
            std::cout << "wrote " << (opt.out_dir / "s5.csv").string() << " (" << rows.size() << " rows)\n";
        } else if (*report_cmd) {
            std::cout << qksa::report(report_dir);
        } else if (*validate_cmd) {
            try {
                const auto cfg = qksa::load_config(validate_path);
                std::cout << "ok: " << cfg.genome.pool.size() << " strategies, run_dir " << cfg.run_dir.string() << "\n";
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kConfigError;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "fault: " << e.what() << "\n";
        return kRuntimeFault;
    }
    return kOk;
}
