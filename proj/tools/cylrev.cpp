#include <CLI11.hpp>

#include <iostream>

#include "cylrev/pipeline.hpp"

using namespace cylrev;

namespace {

void print_error_json(const std::string& stage, const std::string& kind,
                      const std::string& message) {
    nlohmann::json err = {{"error", {{"stage", stage}, {"kind", kind}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cylrev: sketch-extrude CAD recovery from multi-view label maps"};
    app.require_subcommand(1);

    std::string config_path, out_dir, sweep;
    uint64_t seed = 0;
    bool seed_set = false, threads_set = false;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--out", out_dir, "output directory (or CYLREV_OUT)");
        cmd->add_option("--seed", seed, "global seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--threads", threads, "thread count (1 = deterministic mode)")
            ->each([&](const std::string&) { threads_set = true; });
    };

    std::vector<std::string> stages = {"generate", "render",   "fit",     "reconstruct",
                                       "evaluate", "pipeline", "ablate"};
    for (const auto& s : stages) {
        CLI::App* cmd = app.add_subcommand(s);
        add_common(cmd);
        if (s == "ablate")
            cmd->add_option("sweep", sweep, "parameter to sweep: views|width|k")->required();
    }

    CLI11_PARSE(app, argc, argv);
    std::string stage = app.get_subcommands().front()->get_name();

    PipelineConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        } else {
            cfg.apply_preset("desk");
        }
        if (seed_set) cfg.seed = seed;
        if (threads_set) cfg.threads = threads;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        cfg.validate();
    } catch (const ConfigError& e) {
        print_error_json(stage, "config", e.what());
        return 2;
    }

    try {
        if (stage == "ablate")
            stage_ablate(cfg, sweep);
        else
            run_stage(stage, cfg);
    } catch (const ConfigError& e) {
        print_error_json(stage, "config", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error_json(stage, "stage", e.what());
        return 3;
    }
    return 0;
}
