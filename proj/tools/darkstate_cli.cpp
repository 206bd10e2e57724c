#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "darkstate/commands.hpp"

using namespace darkstate;

int main(int argc, char **argv) {
    CLI::App app{"Mixed-state engineering by dark-state relaxation in a four-level system"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string sequence_path;
    std::uint64_t seed = 0;
    bool strict = false;
    int threads = 1;

    auto add_common = [&](CLI::App *sub, bool needs_config) {
        auto *c = sub->add_option("--config", config_path, "experiment config (JSON)");
        if (needs_config) c->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override optimizer.seed");
        sub->add_flag("--strict", strict, "nonzero exit when a quality gate fails");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
    };

    struct Command {
        const char *name;
        const char *help;
        int (*run)(const ExperimentConfig &, const RunOptions &);
        bool takes_sequence;
    };
    const Command commands[] = {
        {"optimize", "search for a pulse sequence reaching the target", cmd_optimize, false},
        {"simulate", "integrate the master equation through a sequence", cmd_simulate, true},
        {"verify", "certify the relaxation maps against the dynamics", cmd_verify, true},
        {"bloch-export", "export staged Bloch point clouds", cmd_bloch_export, true},
        {"spectrum", "Liouvillian eigenvalues and zero subspace", cmd_spectrum, true},
        {"sweep-purity", "steps needed versus target purity", cmd_sweep_purity, false},
        {"reproduce-paper", "optimize, simulate and export with the bundled config", cmd_reproduce, false},
    };
    for (const Command &c : commands) {
        CLI::App *sub = app.add_subcommand(c.name, c.help);
        add_common(sub, std::string(c.name) != "reproduce-paper");
        if (c.takes_sequence)
            sub->add_option("--sequence", sequence_path, "sequence document (default <out>/optimize.json)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const Command *chosen = nullptr;
    for (const Command &c : commands)
        if (app.got_subcommand(c.name)) chosen = &c;
    const CLI::App *sub = app.get_subcommand(chosen->name);

    return run_guarded(
        [&] {
            if (config_path.empty()) config_path = std::string(DARKSTATE_CONFIG_DIR) + "/paper_target.json";
            ExperimentConfig cfg = load_config(config_path);
            if (sub->count("--seed")) cfg.optimizer.seed = seed;

            RunOptions opt;
            opt.out = out_dir;
            opt.strict = strict;
            opt.threads = threads;
            if (!sequence_path.empty()) opt.sequence = sequence_path;
            std::filesystem::create_directories(opt.out);
            return chosen->run(cfg, opt);
        },
        std::cerr);
}
