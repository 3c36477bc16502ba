#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "airrecomp/errors.hpp"
#include "airrecomp/harness.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    int workers = 0;
    bool full_scale = false;
    std::string out;
};

void add_common(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (sections per module)");
    cmd->add_option("--seed", o.seed, "master seed (mandatory here or in the config)")
        ->each([&o](const std::string&) { o.seed_set = true; });
    cmd->add_option("--trials", o.trials, "Monte-Carlo trials / training repetitions");
    cmd->add_option("--workers", o.workers, "worker threads (results are worker-count independent)");
    cmd->add_flag("--full-scale", o.full_scale, "full-size dataset and repetition counts");
    cmd->add_option("--out", o.out, "output CSV path (stdout when omitted)");
}

int run(const std::string& experiment, const CliOverrides& o) {
    airrecomp::ExperimentConfig cfg;
    if (!o.config_path.empty()) {
        cfg = airrecomp::load_config(o.config_path);
    }
    cfg.experiment = experiment;
    if (o.seed_set) {
        cfg.seed = o.seed;
        cfg.seed_set = true;
    }
    if (o.trials > 0) {
        cfg.trials = o.trials;
    }
    if (o.workers > 0) {
        cfg.workers = o.workers;
    }
    if (o.full_scale) {
        cfg.full_scale = true;
    }
    if (!o.out.empty()) {
        cfg.out = o.out;
    }
    airrecomp::run_experiment(cfg);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seeded simulator and analysis toolkit for over-the-air federated learning "
                 "with uplink retransmissions"};
    app.require_subcommand(1);

    const char* names[] = {"mse-sweep",  "baseline-compare", "train",
                           "select-m",   "sigma-sweep",      "bound-validate"};
    const char* descs[] = {
        "estimation error vs noise for each retransmission count",
        "retransmission-aware vs unaware power control",
        "federated training traces under a cost budget",
        "pick the retransmission count minimizing the loss proxy",
        "selected retransmission count across noise levels",
        "empirical loss gap vs the analytic bounds on the quadratic problem"};

    CliOverrides overrides[6];
    CLI::App* cmds[6];
    for (int i = 0; i < 6; ++i) {
        cmds[i] = app.add_subcommand(names[i], descs[i]);
        add_common(cmds[i], overrides[i]);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (int i = 0; i < 6; ++i) {
            if (cmds[i]->parsed()) {
                return run(names[i], overrides[i]);
            }
        }
    } catch (const airrecomp::error& e) {
        std::fprintf(stderr, "error category=%s: %s\n", airrecomp::errc_name(e.category()),
                     e.what());
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error category=internal: %s\n", e.what());
        return 1;
    }
    return 1;
}
