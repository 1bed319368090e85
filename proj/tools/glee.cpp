// Command-line front end. Each subcommand reads a flat key=value config,
// applies the command-line overrides, and runs one stage of the lab:
//
//   glee pretrain  --config lab.cfg            backbone pretraining curve + checkpoint
//   glee generate  --config lab.cfg            synthetic corpus + vocab + prompt files
//   glee train     --config lab.cfg            the variant x seed matrix
//   glee fewshot   --config lab.cfg            the matrix on a 32-shot subsample
//   glee calibrate --config lab.cfg            post-hoc norm calibration over a tau grid
//   glee analyze   --config lab.cfg            norm profiles, slopes, feature stats, SVG
//
// GLEE_THREADS caps how many matrix cells run in parallel.

#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "glee/config.hpp"
#include "glee/error.hpp"
#include "glee/experiment.hpp"
#include "glee/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"glee: a desk-scale laboratory for classifier-head finetuning"};
    app.set_version_flag("--version",
                         std::string(glee::kToolName) + " " + glee::kToolVersion);
    app.require_subcommand(1);

    std::string config_path, output_override, seeds_override;
    const std::map<std::string, std::function<void(const glee::Config&)>> commands = {
        {"pretrain", glee::cmd_pretrain}, {"generate", glee::cmd_generate},
        {"train", glee::cmd_train},       {"fewshot", glee::cmd_fewshot},
        {"calibrate", glee::cmd_calibrate}, {"analyze", glee::cmd_analyze},
    };
    const std::map<std::string, std::string> blurbs = {
        {"pretrain", "pretrain the toy masked-language backbone"},
        {"generate", "write the synthetic long-tailed corpus and prompt files"},
        {"train", "train and evaluate every head variant x seed cell"},
        {"fewshot", "run the matrix on a uniform few-shot subsample"},
        {"calibrate", "re-evaluate trained checkpoints over a tau grid"},
        {"analyze", "emit norm profiles, slopes, feature distributions, and plots"},
    };

    std::string chosen;
    for (const auto& [name, blurb] : blurbs) {
        CLI::App* sub = app.add_subcommand(name, blurb);
        sub->add_option("--config", config_path, "experiment config file")
            ->required();
        sub->add_option("--output", output_override, "override the output directory");
        sub->add_option("--seeds", seeds_override, "override the seed list, e.g. 1,2,3");
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        glee::Config cfg = glee::Config::parse_file(config_path);
        if (!output_override.empty()) cfg.set("output", output_override);
        if (!seeds_override.empty()) cfg.set("seeds", seeds_override);
        commands.at(chosen)(cfg);
        std::cout << chosen << ": artifacts in "
                  << (output_override.empty() ? cfg.get_string("output", "out")
                                              : output_override)
                  << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
